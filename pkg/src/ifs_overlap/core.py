"""Numeric kernel shared by the 1D and 2D machinery.

Scale parameters are either binary64 floats or exact :class:`QuadNumber`
elements.  Containers here (words, step functions, atomic measures, measure
bounds) accept both and keep exact data exact until an output boundary.
"""

from __future__ import annotations

import bisect
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .quadratic import QuadNumber, QuadraticField, golden_field

log = logging.getLogger(__name__)

Scale = Union[float, QuadNumber]

DEFAULT_EPS = 1e-12


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would exceed the configured budget."""


# ---------------------------------------------------------------------------
# scale parameters


def parse_lambda(spec: str | float, exact: bool | None = None) -> Scale:
    """Turn a user-facing λ description into a scale value.

    Accepted forms: ``"golden"``, a rational ``"p/q"``, a quadratic
    ``"quad:p,q"`` (root in (0,1) of x² = p·x + q), or a decimal.  Decimals are
    always binary64; ``exact=False`` forces float for the other forms too.
    """
    if isinstance(spec, (float, int)) and not isinstance(spec, bool):
        return float(spec)
    if isinstance(spec, QuadNumber):
        return spec if exact is not False else float(spec)
    s = str(spec).strip().lower()
    want_exact = exact is not False
    if s in ("golden", "phi", "golden-ratio"):
        val = golden_field().root
    elif s.startswith("quad:") or s.startswith("("):
        body = s[5:] if s.startswith("quad:") else s.strip("()")
        p, q = (t.strip() for t in body.split(","))
        val = QuadraticField(p, q).root
    elif re.fullmatch(r"[+-]?\d+/\d+", s):
        r = Fraction(s)
        val = QuadraticField(r, 0).root
    else:
        x = float(s)
        if exact:
            log.warning("decimal lambda %s forces float mode", s)
        return x
    return val if want_exact else float(val)


def is_exact_scale(lam: Scale) -> bool:
    return isinstance(lam, QuadNumber)


def one_like(lam: Scale):
    return lam.field(1) if isinstance(lam, QuadNumber) else 1.0


def zero_like(lam: Scale):
    return lam.field(0) if isinstance(lam, QuadNumber) else 0.0


# ---------------------------------------------------------------------------
# words


@dataclass(frozen=True)
class Word:
    digits: tuple[int, ...] = ()
    alphabet_size: int = 2

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet size must be at least 2")
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        for d in self.digits:
            if not 0 <= d < self.alphabet_size:
                raise ValueError(f"digit {d} outside alphabet of size {self.alphabet_size}")

    def __len__(self) -> int:
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def prepend(self, i: int) -> Word:
        return Word((i,) + self.digits, self.alphabet_size)

    def tail(self) -> Word:
        return Word(self.digits[1:], self.alphabet_size)

    def index(self) -> int:
        """Lexicographic rank among words of the same length (first digit most significant)."""
        k = 0
        for d in self.digits:
            k = k * self.alphabet_size + d
        return k

    @classmethod
    def from_index(cls, k: int, length: int, alphabet_size: int = 2) -> Word:
        digits = []
        for _ in range(length):
            k, d = divmod(k, alphabet_size)
            digits.append(d)
        if k:
            raise ValueError("index too large for word length")
        return cls(tuple(reversed(digits)), alphabet_size)


def all_words(length: int, alphabet_size: int = 2) -> np.ndarray:
    """All words of a given length as rows of a digit matrix, in lexicographic order."""
    count = alphabet_size**length
    idx = np.arange(count, dtype=np.int64)
    out = np.empty((count, length), dtype=np.int8)
    for pos in range(length - 1, -1, -1):
        idx, out[:, pos] = np.divmod(idx, alphabet_size)
    return out


# ---------------------------------------------------------------------------
# step functions


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function.

    ``values[0]`` holds below the first breakpoint and ``values[k]`` on
    ``[breakpoints[k-1], breakpoints[k])``.  Float step functions store numpy
    arrays; exact ones store tuples (breakpoints in Q(λ), values in Q).
    """

    breakpoints: Sequence
    values: Sequence

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if isinstance(self.breakpoints, np.ndarray):
            bp = np.asarray(self.breakpoints, dtype=float)
            if bp.size > 1 and not np.all(np.diff(bp) > 0):
                raise ValueError("breakpoints must be strictly increasing")
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        else:
            bp = tuple(self.breakpoints)
            for u, v in zip(bp, bp[1:]):
                if not u < v:
                    raise ValueError("breakpoints must be strictly increasing")
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "values", tuple(self.values))

    @property
    def exact(self) -> bool:
        return not isinstance(self.breakpoints, np.ndarray)

    def __len__(self) -> int:
        return len(self.breakpoints)

    def float_breakpoints(self) -> np.ndarray:
        if not self.exact:
            return self.breakpoints
        return np.array([float(b) for b in self.breakpoints])

    def float_values(self) -> np.ndarray:
        if not self.exact:
            return self.values
        return np.array([float(v) for v in self.values])

    def __call__(self, x):
        """Right-continuous evaluation; vectorised over numpy arrays."""
        if isinstance(x, np.ndarray):
            idx = np.searchsorted(self.float_breakpoints(), x, side="right")
            return self.float_values()[idx]
        if self.exact and isinstance(x, (QuadNumber, Fraction, int)):
            return self.values[bisect.bisect_right(self.breakpoints, x)]
        idx = int(np.searchsorted(self.float_breakpoints(), float(x), side="right"))
        return self.values[idx]

    def left(self, x):
        """Left limit at ``x``."""
        if isinstance(x, np.ndarray):
            idx = np.searchsorted(self.float_breakpoints(), x, side="left")
            return self.float_values()[idx]
        if self.exact and isinstance(x, (QuadNumber, Fraction, int)):
            return self.values[bisect.bisect_left(self.breakpoints, x)]
        idx = int(np.searchsorted(self.float_breakpoints(), float(x), side="left"))
        return self.values[idx]

    def jumps(self) -> list[tuple]:
        return [
            (b, self.values[k + 1] - self.values[k]) for k, b in enumerate(self.breakpoints)
        ]


def heaviside(exact: bool = False) -> StepFunction:
    if exact:
        return StepFunction((0,), (Fraction(0), Fraction(1)))
    return StepFunction(np.array([0.0]), np.array([0.0, 1.0]))


step_eval = StepFunction.__call__
step_eval_left = StepFunction.left


# ---------------------------------------------------------------------------
# atomic measures


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite weighted point list.

    Float measures keep ``points`` as an ``(k,)`` or ``(k, 2)`` array and
    ``weights`` as a float array.  Exact measures keep tuples of points (scalars
    or coordinate pairs in Q(λ)) and :class:`~fractions.Fraction` weights.
    """

    points: Sequence
    weights: Sequence
    consolidated: bool = False

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights differ in length")
        if isinstance(self.weights, np.ndarray):
            object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
            object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
            if np.any(self.weights <= 0):
                raise ValueError("weights must be positive")
        else:
            object.__setattr__(self, "points", tuple(self.points))
            object.__setattr__(self, "weights", tuple(self.weights))
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights must be positive")

    @property
    def exact(self) -> bool:
        return not isinstance(self.weights, np.ndarray)

    @property
    def dim(self) -> int:
        if self.exact:
            return 2 if self.points and isinstance(self.points[0], tuple) else 1
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self):
        if self.exact:
            return sum(self.weights, Fraction(0))
        return float(np.sum(self.weights))

    def float_points(self) -> np.ndarray:
        if not self.exact:
            return self.points
        if self.dim == 1:
            return np.array([float(p) for p in self.points])
        return np.array([[float(c) for c in p] for p in self.points]).reshape(-1, 2)

    def float_weights(self) -> np.ndarray:
        if not self.exact:
            return self.weights
        return np.array([float(w) for w in self.weights])

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """∫ f dm for a vectorised ``f`` evaluated at float points."""
        return float(np.sum(f(self.float_points()) * self.float_weights()))

    def cdf(self) -> StepFunction:
        """Right-continuous CDF of a 1D measure (consolidates first)."""
        if self.dim != 1:
            raise ValueError("CDF is defined for 1D measures only")
        m = self if self.consolidated else consolidate(self)
        if m.exact:
            cum, vals = Fraction(0), [Fraction(0)]
            for w in m.weights:
                cum += w
                vals.append(cum)
            return StepFunction(m.points, vals)
        return StepFunction(m.points, np.concatenate([[0.0], np.cumsum(m.weights)]))


def dirac(point=0.0, exact: bool = False) -> AtomicMeasure:
    if exact:
        return AtomicMeasure((point,), (Fraction(1),), consolidated=True)
    return AtomicMeasure(np.array([float(point)]), np.array([1.0]), consolidated=True)


def _merge_sorted_runs(values: np.ndarray, weights: np.ndarray, eps: float):
    """Merge runs of sorted 1D values whose consecutive gaps are ≤ eps."""
    if values.size == 0:
        return values, weights
    new_run = np.concatenate([[True], np.diff(values) > eps])
    starts = np.flatnonzero(new_run)
    return values[starts], np.add.reduceat(weights, starts)


def consolidate(
    m: AtomicMeasure,
    eq: Callable | None = None,
    *,
    eps: float = DEFAULT_EPS,
) -> AtomicMeasure:
    """Merge atoms at equal points, summing weights.

    Exact measures merge on exact equality (or the supplied predicate ``eq``);
    float measures merge points whose gap is at most ``eps``.  1D results are
    sorted by position.
    """
    if m.exact:
        if eq is None:
            acc: dict = {}
            for p, w in zip(m.points, m.weights):
                acc[p] = acc.get(p, 0) + w
            pts = list(acc)
            wts = [acc[p] for p in pts]
        else:
            pts, wts = [], []
            for p, w in zip(m.points, m.weights):
                for k, q in enumerate(pts):
                    if eq(p, q):
                        wts[k] += w
                        break
                else:
                    pts.append(p)
                    wts.append(w)
        if m.dim == 1:
            order = sort_exact(pts)
        else:
            order = sorted(range(len(pts)), key=lambda k: tuple(float(c) for c in pts[k]))
        return AtomicMeasure(
            tuple(pts[k] for k in order), tuple(wts[k] for k in order), consolidated=True
        )
    if m.dim == 1:
        order = np.argsort(m.points, kind="stable")
        v, w = _merge_sorted_runs(m.points[order], m.weights[order], eps)
        return AtomicMeasure(v, w, consolidated=True)
    key = np.round(m.points / eps).astype(np.int64) if eps > 0 else m.points
    _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    w = np.bincount(inverse.ravel(), weights=m.weights)
    return AtomicMeasure(m.points[first], w, consolidated=True)


def sort_exact(values: Sequence) -> list[int]:
    """Indices sorting exact scalars; float ordering is verified exactly."""
    fl = [float(v) for v in values]
    order = sorted(range(len(values)), key=fl.__getitem__)
    for i, j in zip(order, order[1:]):
        if not values[i] < values[j]:
            from functools import cmp_to_key

            def cmp(i, j):
                return -1 if values[i] < values[j] else (1 if values[j] < values[i] else 0)

            return sorted(range(len(values)), key=cmp_to_key(cmp))
    return order


# ---------------------------------------------------------------------------
# measure bounds


@dataclass(frozen=True)
class MeasureBound:
    """Closed interval [lo, hi] certified to contain a measure value.

    The exact endpoints are rationals (cylinder counts over Nⁿ); ``lo``/``hi``
    are their binary64 images.
    """

    lo_exact: Fraction
    hi_exact: Fraction
    depth: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.lo_exact <= self.hi_exact:
            raise ValueError("empty measure bound")

    @property
    def lo(self) -> float:
        return float(self.lo_exact)

    @property
    def hi(self) -> float:
        return float(self.hi_exact)

    @property
    def width(self) -> float:
        return float(self.hi_exact - self.lo_exact)

    def contains(self, x) -> bool:
        if isinstance(x, float):
            return self.lo <= x <= self.hi
        return self.lo_exact <= x <= self.hi_exact

    def scale_shift(self, scale, shift=0) -> MeasureBound:
        """Interval image under x ↦ scale·x + shift (exact rationals)."""
        scale, shift = Fraction(scale), Fraction(shift)
        a, b = scale * self.lo_exact + shift, scale * self.hi_exact + shift
        return MeasureBound(min(a, b), max(a, b), self.depth)

    def __add__(self, other: MeasureBound) -> MeasureBound:
        return MeasureBound(
            self.lo_exact + other.lo_exact, self.hi_exact + other.hi_exact, min(self.depth, other.depth)
        )

    def __sub__(self, other: MeasureBound) -> MeasureBound:
        return MeasureBound(
            self.lo_exact - other.hi_exact, self.hi_exact - other.lo_exact, min(self.depth, other.depth)
        )

    def intersect(self, other: MeasureBound) -> MeasureBound:
        return MeasureBound(
            max(self.lo_exact, other.lo_exact), min(self.hi_exact, other.hi_exact), max(self.depth, other.depth)
        )

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "lo_exact": str(self.lo_exact),
            "hi_exact": str(self.hi_exact),
            "width": self.width,
            "depth": self.depth,
        }


def powers(lam: Scale, n: int) -> list:
    """[λ¹, …, λⁿ]."""
    out, p = [], lam
    for _ in range(n):
        out.append(p)
        p = p * lam
    return out


def as_float_array(xs: Iterable) -> np.ndarray:
    return np.array([float(x) for x in xs])
