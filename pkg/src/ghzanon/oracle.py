"""Floating-point statevector oracle, independent of the exact tables.

Basis index bit (i - 1) of a state holds party i, matching the behavior
layout.  The observable cos(phi) X + sin(phi) Y has +1 eigenvector
(1, e^{i phi}) / sqrt 2, reported as output bit 0, and -1 eigenvector
(1, -e^{i phi}) / sqrt 2, reported as output bit 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .behavior import Behavior
from .errors import CapacityExceeded, DimensionMismatch

MAX_QUBITS = 14


def _check_state(psi: np.ndarray) -> int:
    n = int(psi.size).bit_length() - 1
    if psi.ndim != 1 or psi.size != 2**n:
        raise DimensionMismatch(f"state of length {psi.size} is not a qubit register")
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise ValueError("state is not normalized")
    return n


def ghz_state(n: int) -> np.ndarray:
    """(|0...0> + |1...1>) / sqrt 2 as a complex vector."""
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > MAX_QUBITS:
        raise CapacityExceeded(f"statevector oracle limited to {MAX_QUBITS} qubits")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def product_plus_state(n: int) -> np.ndarray:
    if n > MAX_QUBITS:
        raise CapacityExceeded(f"statevector oracle limited to {MAX_QUBITS} qubits")
    return np.full(2**n, 2 ** (-n / 2), dtype=complex)


@dataclass(frozen=True)
class EquatorialSetting:
    """Per-party measurement angles ``angles[i] = (phi(x=0), phi(x=1))``.

    ``scalars`` maps a 1-based party to a pair ``(beta(x=0), beta(x=1))``; such
    a party contributes the factor beta to correlators instead of being
    measured.
    """

    angles: tuple[tuple[float, float], ...]
    scalars: dict[int, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for pair in list(self.angles) + list(self.scalars.values()):
            if len(pair) != 2 or not all(math.isfinite(v) for v in pair):
                raise ValueError(f"setting {pair} must be two finite numbers")

    @property
    def n(self) -> int:
        return len(self.angles)

    @classmethod
    def pauli_xy(cls, n: int) -> "EquatorialSetting":
        """sigma_x for input 0 and sigma_y for input 1 on every party."""
        return cls(tuple((0.0, math.pi / 2) for _ in range(n)))

    def measured_parties(self) -> list[int]:
        return [i for i in range(1, self.n + 1) if i not in self.scalars]


def _basis_rows(phi: float) -> np.ndarray:
    """Rows are the conjugated eigenvectors for output bits 0 and 1."""
    e = np.exp(1j * phi)
    return np.conj(np.array([[1, e], [1, -e]])) / math.sqrt(2)


def _outcome_amplitudes(psi: np.ndarray, n: int, phis: Sequence[float]) -> np.ndarray:
    t = psi.reshape((2,) * n)
    for i, phi in enumerate(phis, start=1):
        axis = n - i
        t = np.moveaxis(np.tensordot(_basis_rows(phi), t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def measure_behavior(state: np.ndarray, settings: EquatorialSetting) -> np.ndarray:
    """Float table P[x_idx, a_idx] from projective equatorial measurements."""
    n = _check_state(state)
    if settings.n != n:
        raise DimensionMismatch(f"settings cover {settings.n} parties, state has {n}")
    if settings.scalars:
        raise ValueError("scalar observables have no outcome distribution; use correlator()")
    table = np.empty((2**n, 2**n))
    for x in range(2**n):
        phis = [settings.angles[i][(x >> i) & 1] for i in range(n)]
        table[x] = np.abs(_outcome_amplitudes(state, n, phis)) ** 2
    return table


def correlator(state: np.ndarray, settings: EquatorialSetting, x: Sequence[int]) -> float:
    """<prod_i A_{x_i}> over all parties, scalar observables included as factors."""
    n = _check_state(state)
    if settings.n != n or len(x) != n:
        raise DimensionMismatch("settings, state and input word disagree on n")
    phis = [settings.angles[i][x[i]] if (i + 1) not in settings.scalars else None
            for i in range(n)]
    t = state.reshape((2,) * n)
    for i, phi in enumerate(phis, start=1):
        if phi is None:
            continue
        e = np.exp(1j * phi)
        obs = np.array([[0, np.conj(e)], [e, 0]])
        t = np.moveaxis(np.tensordot(obs, t, axes=([1], [n - i])), 0, n - i)
    value = np.vdot(state, t.reshape(-1)).real
    for party, betas in settings.scalars.items():
        value *= betas[x[party - 1]]
    return float(value)


def biseparable_construction_settings(n: int) -> EquatorialSetting:
    """Angles on parties 1..n-1 and scalar observables on party n."""
    if n < 2:
        raise ValueError("need n >= 2")
    a0 = -math.pi / (4 * (n - 1))
    a1 = -math.pi / 2 - math.pi / (4 * (n - 1))
    b0 = -math.sqrt(2) * math.sin(n * math.pi / 4)
    b1 = math.sqrt(2) * math.cos(n * math.pi / 4)
    return EquatorialSetting(tuple((a0, a1) for _ in range(n - 1)) + ((0.0, 0.0),), {n: (b0, b1)})


def biseparable_construction_state(n: int) -> np.ndarray:
    """|GHZ_{n-1}> tensor |0> with the |0> on party n."""
    return np.kron(np.array([1, 0], dtype=complex), ghz_state(n - 1))


def mermin_plus_float(n: int, corr) -> float:
    """B_+ from a callable giving the full correlator of each input word."""
    total = 0.0
    for xi in range(2**n):
        x = tuple((xi >> i) & 1 for i in range(n))
        total += math.cos(math.pi / 4 * (1 + n - 2 * sum(x))) * corr(x)
    return total * 2 ** ((1 - n) / 2)


def appendix_c_value(n: int) -> float:
    """B_+ of the biseparable construction; expected 2**(n/2 - 1)."""
    state, settings = biseparable_construction_state(n), biseparable_construction_settings(n)
    return mermin_plus_float(n, lambda x: correlator(state, settings, x))


def oracle_compare(exact: Behavior, table) -> float:
    """Max absolute deviation between an exact behavior and a float table."""
    table = np.asarray(table, dtype=float)
    size = 2**exact.n
    if table.size != size * size:
        raise DimensionMismatch(f"table has {table.size} entries, expected {size * size}")
    return float(np.max(np.abs(exact.as_float() - table.reshape(size, size))))
