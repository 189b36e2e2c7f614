"""Exact arithmetic in Q(λ₀) where λ₀ is a root in (0,1) of x² = p·x + q.

Elements are stored as ``a + b·λ₀`` with rational coefficients.  Products are
reduced with λ₀² = p·λ₀ + q, so +, −, ×, ÷ stay exact.  Order comparisons use a
certified dyadic enclosure of λ₀ that is bisected until the sign is decided.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from numbers import Rational
from typing import Union

Scalar = Union[int, Fraction]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _rational_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


class QuadraticField:
    """The field Q(λ₀) for the root λ₀ ∈ (0,1) of ``x² = p·x + q``.

    When the polynomial has a rational root the field degenerates to Q and every
    element is normalised to ``b = 0``.
    """

    def __init__(self, p: Scalar | str, q: Scalar | str, *, branch: str | None = None):
        self.p = _as_fraction(p)
        self.q = _as_fraction(q)
        disc = self.p * self.p + 4 * self.q
        if disc < 0:
            raise ValueError(f"x^2 = {self.p}x + {self.q} has no real root")
        sd = math.sqrt(float(disc))
        roots = {"+": (float(self.p) + sd) / 2, "-": (float(self.p) - sd) / 2}
        candidates = [s for s, r in roots.items() if self._in_unit(s, disc)]
        if branch is not None:
            if branch not in candidates:
                raise ValueError(f"root branch {branch!r} is not in (0,1)")
            self.branch = branch
        elif not candidates:
            raise ValueError(f"x^2 = {self.p}x + {self.q} has no root in (0,1)")
        else:
            self.branch = "+" if "+" in candidates else "-"
        self.disc = disc
        self.rational_root: Fraction | None = None
        r = _rational_sqrt(disc)
        if r is not None:
            sgn = 1 if self.branch == "+" else -1
            self.rational_root = (self.p + sgn * r) / 2
        self._float = roots[self.branch]
        self._lo, self._hi = self._initial_enclosure()
        # tighten to 2^-80 so the cached float is the correctly rounded root
        while self._hi - self._lo > Fraction(1, 1 << 80):
            self.refine()
        self._float = float((self._lo + self._hi) / 2)

    def _in_unit(self, branch: str, disc: Fraction) -> bool:
        # exact test of 0 < (p ± √disc)/2 < 1
        sgn = 1 if branch == "+" else -1

        def gt(c: Fraction) -> bool:
            # (p + sgn√disc)/2 > c  ⇔  sgn√disc > 2c − p
            rhs = 2 * c - self.p
            if sgn > 0:
                return rhs < 0 or disc > rhs * rhs
            return rhs < 0 and disc < rhs * rhs

        def lt(c: Fraction) -> bool:
            rhs = 2 * c - self.p
            if sgn > 0:
                return rhs > 0 and disc < rhs * rhs
            return rhs > 0 or disc > rhs * rhs

        return gt(Fraction(0)) and lt(Fraction(1))

    def _poly(self, x: Fraction) -> Fraction:
        return x * x - self.p * x - self.q

    def _initial_enclosure(self) -> tuple[Fraction, Fraction]:
        if self.rational_root is not None:
            return self.rational_root, self.rational_root
        scale = 1 << 60
        guess = Fraction(round(self._float * scale), scale)
        lo, hi = guess - Fraction(1, 1 << 40), guess + Fraction(1, 1 << 40)
        if not self._brackets(lo, hi):
            lo, hi = Fraction(0), Fraction(1)
            # fall back to bisection from the unit interval
            while hi - lo > Fraction(1, 1 << 40):
                lo, hi = self._bisect(lo, hi)
        return lo, hi

    def _brackets(self, lo: Fraction, hi: Fraction) -> bool:
        flo, fhi = self._poly(lo), self._poly(hi)
        if flo == 0 or fhi == 0 or (flo > 0) == (fhi > 0):
            return False
        # the other root must lie outside [lo, hi]
        other = self.p - (lo + hi) / 2
        return not (lo <= other <= hi)

    def _bisect(self, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
        mid = (lo + hi) / 2
        fm = self._poly(mid)
        if fm == 0:
            return mid, mid
        if (fm > 0) == (self._poly(lo) > 0):
            return mid, hi
        return lo, mid

    def refine(self) -> None:
        """Halve the width of the stored enclosure of λ₀."""
        if self._lo != self._hi:
            self._lo, self._hi = self._bisect(self._lo, self._hi)

    @property
    def enclosure(self) -> tuple[Fraction, Fraction]:
        return self._lo, self._hi

    @property
    def degenerate(self) -> bool:
        return self.rational_root is not None

    @property
    def root(self) -> QuadNumber:
        return QuadNumber(self, 0, 1)

    def __call__(self, a: Scalar = 0, b: Scalar = 0) -> QuadNumber:
        return QuadNumber(self, a, b)

    def __float__(self) -> float:
        return self._float

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuadraticField)
            and self.p == other.p
            and self.q == other.q
            and self.branch == other.branch
        )

    def __hash__(self) -> int:
        return hash((self.p, self.q, self.branch))

    def __repr__(self) -> str:
        return f"QuadraticField(p={self.p}, q={self.q}, branch={self.branch!r})"


def golden_field() -> QuadraticField:
    """λ₀ = (√5 − 1)/2, the positive root of λ² + λ − 1 = 0."""
    return QuadraticField(-1, 1)


def quad_make(p: Scalar | str, q: Scalar | str) -> QuadraticField:
    return QuadraticField(p, q)


@total_ordering
class QuadNumber:
    """An element ``a + b·λ₀`` of a :class:`QuadraticField`."""

    __slots__ = ("field", "a", "b", "_hash")

    def __init__(self, field: QuadraticField, a: Scalar = 0, b: Scalar = 0):
        a, b = _as_fraction(a), _as_fraction(b)
        if field.rational_root is not None and b:
            a, b = a + b * field.rational_root, Fraction(0)
        self.field = field
        self.a = a
        self.b = b
        self._hash = None

    # -- coercion -------------------------------------------------------
    def _coerce(self, other) -> QuadNumber | None:
        if isinstance(other, QuadNumber):
            if other.field is not self.field and other.field != self.field:
                raise ValueError("operands belong to different quadratic fields")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadNumber(self.field, other, 0)
        return None

    # -- ring operations ------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadNumber(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return QuadNumber(self.field, -self.a, -self.b)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return QuadNumber(self.field, self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return QuadNumber(self.field, self.a * other, self.b * other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        f = self.field
        bb = self.b * o.b
        # (a + bλ)(c + dλ) = ac + (ad + bc)λ + bd(pλ + q)
        return QuadNumber(f, self.a * o.a + bb * f.q, self.a * o.b + self.b * o.a + bb * f.p)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        """(a + bλ₀)(a + bλ₀') = a² + a·b·p − b²·q; zero iff the element is zero."""
        f = self.field
        if f.rational_root is not None:
            return self.a * self.a
        return self.a * self.a + self.a * self.b * f.p - self.b * self.b * f.q

    def conjugate(self) -> QuadNumber:
        f = self.field
        return QuadNumber(f, self.a + self.b * f.p, -self.b)

    def inverse(self) -> QuadNumber:
        if self.field.rational_root is not None:
            if self.a == 0:
                raise ZeroDivisionError("division by zero in quadratic field")
            return QuadNumber(self.field, 1 / self.a, 0)
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        c = self.conjugate()
        return QuadNumber(self.field, c.a / n, c.b / n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero in quadratic field")
            return QuadNumber(self.field, self.a / other, self.b / other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadNumber(self.field, 1, 0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- order ----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def sign(self) -> int:
        if self.b == 0:
            return (self.a > 0) - (self.a < 0)
        f = self.field
        while True:
            lo, hi = f.enclosure
            u, v = self.a + self.b * lo, self.a + self.b * hi
            if u > 0 and v > 0:
                return 1
            if u < 0 and v < 0:
                return -1
            if lo == hi:
                # only reachable for a rational root, where b is normalised away
                return (u > 0) - (u < 0)
            f.refine()

    def __eq__(self, other) -> bool:
        if isinstance(other, float):
            return False
        try:
            o = self._coerce(other)
        except ValueError:
            return False
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __lt__(self, other) -> bool:
        if isinstance(other, float):
            return float(self) < other
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.a, self.b)) if self.b else hash(self.a)
        return self._hash

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __float__(self) -> float:
        if self.b == 0:
            return float(self.a)
        f = self.field
        a, b = float(self.a), float(self.b)
        lam = f._float
        direct = a + b * lam
        conj = a + b * (float(f.p) - lam)
        if abs(direct) >= 1e-3 * (abs(a) + abs(b * lam)) or abs(direct) >= abs(conj):
            return direct
        # a + bλ cancels: use (a + bλ)(a + bλ') = norm, whose other factor does not
        return float(self.norm()) / conj

    def __repr__(self) -> str:
        if self.b == 0:
            return f"{self.a}"
        return f"{self.a} + {self.b}·λ"

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "float": float(self)}


def is_exact(x) -> bool:
    return isinstance(x, (QuadNumber, Fraction, int))


def to_float(x) -> float:
    return float(x)
