"""Command-line entry point: ``ghzanon <subcommand> ...``.

Exit status: 0 on success, 1 when a checked property fails (a failed
verification or a ``--expect`` mismatch), 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import bell, bisep, boxes, oracle, protocols
from .behavior import Behavior, index_to_bits
from .errors import GhzAnonError, NotAPartition, ParseError

SEED_ENV = "GHZANON_SEED"

_SPEC = re.compile(r"^\s*\d+(\s*,\s*\d+)*\s*\|\s*\d+(\s*,\s*\d+)*\s*$")


class UsageError(Exception):
    pass


def parse_partition_spec(text: str, n: int | None = None) -> bisep.Bipartition:
    """Parse ``"1,3|2,4"`` into a canonical Bipartition.

    Without ``n`` the party count is taken from the largest listed party.
    """
    if not _SPEC.match(text or ""):
        raise ParseError(f"partition spec {text!r} must look like '1,3|2,4'")
    left, right = ([int(v) for v in side.split(",")] for side in text.split("|"))
    every = left + right
    if len(set(every)) != len(every):
        dup = sorted({p for p in every if every.count(p) > 1})
        raise NotAPartition(f"parties {dup} appear more than once")
    n = max(every) if n is None else n
    missing = sorted(set(range(1, n + 1)) - set(every))
    extra = sorted(set(every) - set(range(1, n + 1)))
    if missing or extra:
        raise NotAPartition(f"spec does not partition 1..{n} (missing {missing}, out of range {extra})")
    return bisep.Bipartition(n, tuple(left))


# --------------------------------------------------------------------------
# output helpers


def _emit(obj, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    else:
        _pretty(obj, out)


def _pretty(obj, out, indent: str = "") -> None:
    if isinstance(obj, dict):
        if set(obj) >= {"a", "b", "decimal"}:
            out.write(f"{obj['decimal']}  ({obj['a']} + {obj['b']}*sqrt2)\n")
            return
        out.write("\n" if indent else "")
        for k, v in obj.items():
            out.write(f"{indent}{k}: ")
            if isinstance(v, (dict, list)):
                _pretty(v, out, indent + "  ")
            else:
                out.write(f"{v}\n")
    elif isinstance(obj, list):
        out.write("\n")
        for v in obj:
            out.write(f"{indent}- ")
            _pretty(v, out, indent + "  ")
    else:
        out.write(f"{obj}\n")


def _behavior_rows(b: Behavior):
    for x in range(2**b.n):
        for a in range(2**b.n):
            yield (
                "".join(map(str, index_to_bits(x, b.n))),
                "".join(map(str, index_to_bits(a, b.n))),
                b.table[x * 2**b.n + a],
            )


def _emit_behavior(b: Behavior, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(b.to_json()) + "\n")
    elif fmt == "csv":
        out.write("x,a,p\n")
        for x, a, p in _behavior_rows(b):
            out.write(f"{x},{a},{p}\n")
    else:
        out.write(f"n={b.n}  (bits listed party 1 first; output bit 0 means +1)\n")
        for x, a, p in _behavior_rows(b):
            if p:
                out.write(f"x={x} a'={a}  {p}\n")


def _load_behavior(path: str) -> Behavior:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"behavior file {path} not found")
    return Behavior.from_json(json.loads(p.read_text()))


def _behavior_arg(args) -> Behavior:
    if getattr(args, "behavior", None):
        return _load_behavior(args.behavior)
    if getattr(args, "n", None) is None:
        raise UsageError("give --n N (GHZ correlation) or --behavior FILE")
    return boxes.ghz_behavior(args.n)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_ghz_table(args, out) -> int:
    _emit_behavior(boxes.ghz_behavior(args.n), args.format, out)
    return 0


def cmd_ns_box(args, out) -> int:
    _emit_behavior(boxes.ns_box(args.n, args.family), args.format, out)
    return 0


def cmd_decompose(args, out) -> int:
    bp = parse_partition_spec(args.partition, args.n)
    m = bisep.ghz_bisep_mixture(args.n, bp)
    data = m.to_json()
    data["bipartition"] = str(bp)
    _emit(data, "json" if args.format == "csv" else args.format, out)
    return 0


def cmd_verify_decomposition(args, out) -> int:
    if args.all:
        bps = bisep.enumerate_bipartitions(args.n)
    elif args.partition:
        bps = [parse_partition_spec(args.partition, args.n)]
    else:
        raise UsageError("give --all or --partition SPEC")
    failures = 0
    for bp in bps:
        ok = bisep.verify_ghz_bisep(args.n, bp)
        failures += not ok
        out.write(f"{'PASS' if ok else 'FAIL'} {bp}\n")
    return 1 if failures else 0


def _check_expect(expect: str | None, feasible: bool) -> int:
    if expect is None:
        return 0
    want = expect in ("feasible", "local")
    return 0 if want == feasible else 1


def cmd_bisep_lp(args, out) -> int:
    b = _behavior_arg(args)
    bp = parse_partition_spec(args.partition, b.n)
    cert = bisep.bisep_lp(b, bp, method=args.method)
    _emit(cert.to_json(), "json" if args.format == "csv" else args.format, out)
    return _check_expect(args.expect, cert.feasible)


def cmd_mermin(args, out) -> int:
    b = _behavior_arg(args)
    bp, bm = bell.mermin_value(b, "+"), bell.mermin_value(b, "-")
    top = max(abs(bp), abs(bm))
    data = {
        "n": b.n,
        "b_plus": bp.to_json(),
        "b_minus": bm.to_json(),
        "value": top.to_json(),
        "local_bound": 1,
        "quantum_maximum": bell.quantum_maximum(b.n).to_json(),
    }
    _emit(data, args.format if args.format != "csv" else "json", out)
    return 0


def cmd_sigma(args, out) -> int:
    b = _behavior_arg(args)
    data = {
        "n": b.n,
        "sigma": bell.sigma_value(b).to_json(),
        "three_separable_bound": bell.three_separable_sigma_bound(b.n).to_json(),
    }
    _emit(data, args.format if args.format != "csv" else "json", out)
    return 0


def cmd_classify(args, out) -> int:
    report = bell.classify(_behavior_arg(args))
    _emit(report.to_json(), args.format if args.format != "csv" else "json", out)
    return 0


def cmd_local_test(args, out) -> int:
    res = bell.local_lp(_behavior_arg(args), method=args.method)
    _emit(res.to_json(), args.format if args.format != "csv" else "json", out)
    return _check_expect(args.expect, res.feasible)


def cmd_oracle(args, out) -> int:
    n = args.n
    table = oracle.measure_behavior(oracle.ghz_state(n), oracle.EquatorialSetting.pauli_xy(n))
    data = {"n": n, "max_deviation_vs_exact": oracle.oracle_compare(boxes.ghz_behavior(n), table)}
    if args.appendix_c:
        data["biseparable_construction_value"] = oracle.appendix_c_value(n)
        data["expected"] = 2 ** (n / 2 - 1)
    _emit(data, args.format if args.format != "csv" else "json", out)
    return 0


def _transcript_out(t: protocols.Transcript, args, out) -> None:
    if args.csv:
        Path(args.csv).write_text(t.to_csv())
    if args.format == "csv":
        out.write(t.to_csv())
    elif args.format == "json":
        out.write(t.to_json(include_rounds=args.records) + "\n")
    else:
        _pretty({"protocol": t.protocol, "n": t.n, "seed": t.seed, "adversary": t.adversary,
                 **t.summary()}, out)


def _parse_adversary(text: str | None, n: int) -> protocols.AdversaryModel:
    if text is None or text == "none":
        return protocols.AdversaryModel.none()
    if text.startswith("bisep:"):
        return protocols.AdversaryModel.bisep(parse_partition_spec(text[len("bisep:"):], n))
    if text.startswith("leak:"):
        return protocols.AdversaryModel.leakage(_parse_leak(text[len("leak:"):]))
    raise UsageError(f"adversary {text!r} must be 'none', 'bisep:SPEC' or 'leak:POLICY'")


def _parse_leak(text: str):
    return int(text, 0) if re.fullmatch(r"0x[0-9a-fA-F]+|\d+", text) else text


def cmd_simulate_mss(args, out) -> int:
    grouping = "random" if args.grouping == "random" else parse_partition_spec(args.grouping, args.n)
    t = protocols.run_mss(args.n, args.rounds, args.seed, grouping, _parse_adversary(args.adversary, args.n))
    _transcript_out(t, args, out)
    return 0


def cmd_simulate_qkd(args, out) -> int:
    adv = protocols.AdversaryModel.leakage(_parse_leak(args.leak)) if args.leak else None
    t = protocols.run_qkd(args.n, args.rounds, args.seed, adv)
    _transcript_out(t, args, out)
    return 0


def cmd_eve_partition(args, out) -> int:
    _emit(protocols.eve_partition_success(args.n, args.rounds, args.seed),
          args.format if args.format != "csv" else "json", out)
    return 0


# --------------------------------------------------------------------------
# parser


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghzanon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, *, n=True, n_required=True, fmt=True):
        p = sub.add_parser(name, help=help_, description=help_)
        if n:
            p.add_argument("--n", type=_positive, required=n_required, help="number of parties")
        if fmt:
            p.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
        p.set_defaults(func=func)
        return p

    add("ghz-table", cmd_ghz_table, "exact GHZ correlation table")
    p = add("ns-box", cmd_ns_box, "exact table of one NS box family")
    p.add_argument("--family", required=True, choices=[f.value for f in boxes.BoxFamily])

    p = add("decompose", cmd_decompose, "four-term NS-box mixture for a bipartition")
    p.add_argument("--partition", required=True, help="e.g. 1,3|2,4")

    p = add("verify-decomposition", cmd_verify_decomposition,
            "check the mixture reproduces the GHZ table exactly", fmt=False)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="every bipartition")
    g.add_argument("--partition", help="a single bipartition")

    for name, func, help_ in (
        ("bisep-lp", cmd_bisep_lp, "exact biseparability LP (groups of at most 2 parties)"),
        ("local-test", cmd_local_test, "exact local-polytope membership with certificate"),
    ):
        p = add(name, func, help_, n_required=False)
        p.add_argument("--behavior", help="behavior JSON file (default: GHZ of --n parties)")
        p.add_argument("--method", choices=("auto", "exact", "seeded"), default="auto")
        if name == "bisep-lp":
            p.add_argument("--partition", required=True)
            p.add_argument("--expect", choices=("feasible", "infeasible"))
        else:
            p.add_argument("--expect", choices=("local", "nonlocal"))

    for name, func, help_ in (
        ("mermin", cmd_mermin, "exact Mermin values"),
        ("sigma", cmd_sigma, "exact Sigma-expression value"),
        ("classify", cmd_classify, "Bell values against every reference bound"),
    ):
        p = add(name, func, help_, n_required=False)
        p.add_argument("--behavior", help="behavior JSON file (default: GHZ of --n parties)")

    p = add("oracle", cmd_oracle, "statevector cross-check of the GHZ table")
    p.add_argument("--appendix-c", action="store_true",
                   help="also evaluate the biseparable-state construction")

    default_seed = None
    for name, func, help_ in (
        ("simulate-mss", cmd_simulate_mss, "simulate secret sharing between two groups"),
        ("simulate-qkd", cmd_simulate_qkd, "simulate two-party key distribution"),
        ("eve-partition", cmd_eve_partition, "box attack with a random bipartition guess"),
    ):
        p = add(name, func, help_)
        p.add_argument("--rounds", type=_positive, default=10_000)
        p.add_argument("--seed", type=int, default=default_seed,
                       help=f"PRNG seed (default: ${SEED_ENV} or 0)")
        if name != "eve-partition":
            p.add_argument("--csv", help="also write every round to this CSV file")
            p.add_argument("--records", action="store_true", help="include rounds in JSON output")
        if name == "simulate-mss":
            p.add_argument("--grouping", default="random", help="'random' or a spec like 1|2,3")
            p.add_argument("--adversary", help="none, bisep:SPEC or leak:POLICY")
        if name == "simulate-qkd":
            p.add_argument("--leak", help=f"one of {', '.join(protocols.LEAK_POLICIES)} or a party bitmask")
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        if getattr(args, "csv", None):
            parent = Path(args.csv).resolve().parent
            if not parent.is_dir():
                raise UsageError(f"directory {parent} does not exist")
        return args.func(args, out)
    except (UsageError, GhzAnonError, ValueError) as exc:
        err.write(f"ghzanon {args.command}: {exc}\n")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
