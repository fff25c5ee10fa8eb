"""Coefficient arithmetic for the two element modes.

Exact mode works over the Gaussian rationals Q(i); float mode uses Python
``complex``.  Elements never mix the two.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)

# float-mode coefficients at or below this magnitude are dropped
PRUNE_TOL = 1e-14


class GaussRat:
    """An element ``re + im*i`` of Q(i) with :class:`Fraction` parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        if isinstance(value, (int, Fraction, Rational)):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls(Fraction(value))
        if isinstance(value, float):
            return cls(Fraction(value))
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        raise TypeError(f"cannot interpret {value!r} as an exact coefficient")

    def _other(self, other):
        if isinstance(other, GaussRat):
            return other
        if isinstance(other, (int, Fraction)):
            return GaussRat(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GaussRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GaussRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        if isinstance(other, int):
            return GaussRat(self.re * other, self.im * other)
        o = self._other(other)
        if o is NotImplemented:
            return o
        return GaussRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        num = self * o.conjugate()
        return GaussRat(num.re / d, num.im / d)

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __pow__(self, n: int):
        if n < 0:
            return GaussRat(1) / (self ** -n)
        out, base = GaussRat(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return float(self.abs2()) ** 0.5

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._other(other) if not isinstance(other, complex) else None
        if o is None or o is NotImplemented:
            return complex(self) == other
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        if not self.im:
            return f"GaussRat({self.re})"
        return f"GaussRat({self.re}, {self.im})"


def coerce(value, mode: str):
    """Convert ``value`` to the coefficient type of ``mode``."""
    if mode == EXACT:
        return GaussRat.coerce(value)
    if mode == FLOAT:
        if isinstance(value, str):
            return complex(float(Fraction(value)))
        return complex(value)
    raise ValueError(f"unknown mode {mode!r}")


def is_zero(c, mode: str) -> bool:
    if mode == EXACT:
        return not c
    return abs(c) <= PRUNE_TOL


def abs2(c):
    """|c|^2, exact for GaussRat."""
    if isinstance(c, GaussRat):
        return c.abs2()
    if isinstance(c, (int, Fraction)):
        return c * c
    return (c * c.conjugate()).real if isinstance(c, complex) else c * c


def conj(c):
    if isinstance(c, (int, Fraction)):
        return c
    return c.conjugate()


def format_coeff(c) -> tuple[str, str]:
    """(re, im) as strings; exact coefficients keep their rational form."""
    if isinstance(c, GaussRat):
        return str(c.re), str(c.im)
    c = complex(c)
    return repr(c.real), repr(c.imag)
