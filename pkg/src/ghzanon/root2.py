"""Exact arithmetic in Q[sqrt 2]."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction


def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


@functools.total_ordering
@dataclass(frozen=True)
class Root2Scalar:
    """The number ``a + b * sqrt(2)`` with exact rational ``a`` and ``b``."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    @classmethod
    def coerce(cls, v) -> "Root2Scalar":
        if isinstance(v, Root2Scalar):
            return v
        if isinstance(v, float):
            raise TypeError("floats cannot be coerced exactly")
        return cls(Fraction(v), Fraction(0))

    def __add__(self, other):
        o = Root2Scalar.coerce(other)
        return Root2Scalar(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Root2Scalar(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-Root2Scalar.coerce(other))

    def __rsub__(self, other):
        return Root2Scalar.coerce(other) - self

    def __mul__(self, other):
        o = Root2Scalar.coerce(other)
        return Root2Scalar(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate(self) -> "Root2Scalar":
        return Root2Scalar(self.a, -self.b)

    def norm(self) -> Fraction:
        """Field norm a**2 - 2 b**2."""
        return self.a * self.a - 2 * self.b * self.b

    def __truediv__(self, other):
        o = Root2Scalar.coerce(other)
        nrm = o.norm()
        if nrm == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt 2]")
        num = self * o.conjugate()
        return Root2Scalar(num.a / nrm, num.b / nrm)

    def __rtruediv__(self, other):
        return Root2Scalar.coerce(other) / self

    def sign(self) -> int:
        sa, sb = _sign(self.a), _sign(self.b)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        # Opposite signs: compare a**2 with 2 b**2.
        return sa if self.a * self.a > 2 * self.b * self.b else sb

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __eq__(self, other):
        try:
            o = Root2Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __lt__(self, other):
        return (self - Root2Scalar.coerce(other)).sign() < 0

    def __bool__(self):
        return bool(self.a) or bool(self.b)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2)

    def is_rational(self) -> bool:
        return self.b == 0

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}*sqrt2"
        op = "+" if self.b > 0 else "-"
        return f"{self.a} {op} {abs(self.b)}*sqrt2"

    def to_json(self) -> dict:
        return {"a": f"{self.a.numerator}/{self.a.denominator}",
                "b": f"{self.b.numerator}/{self.b.denominator}",
                "decimal": f"{float(self):.12g}"}

    @classmethod
    def from_json(cls, data: dict) -> "Root2Scalar":
        return cls(Fraction(data["a"]), Fraction(data["b"]))


SQRT2 = Root2Scalar(0, 1)


def sqrt2_power(k: int) -> Root2Scalar:
    """sqrt(2)**k for any integer k."""
    if k % 2 == 0:
        return Root2Scalar(Fraction(2) ** (k // 2), 0)
    return Root2Scalar(0, Fraction(2) ** ((k - 1) // 2))
