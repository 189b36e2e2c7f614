"""The two-map IFS τ₀(x) = λx, τ₁(x) = λ(x+1) on the line.

Node sets, cascade CDF approximants, the truncated encoding map, Hutchinson
iteration and the 1D Kantorovich distance.  Every routine works with a float
λ (numpy, tolerance ``eps``) or an exact :class:`QuadNumber` λ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_EPS,
    AtomicMeasure,
    BudgetExceeded,
    Scale,
    StepFunction,
    Word,
    consolidate,
    heaviside,
    is_exact_scale,
    parse_lambda,
    sort_exact,
)
from .quadratic import QuadNumber

FLOAT_BUDGET = 26
EXACT_BUDGET = 20


@dataclass(frozen=True)
class IFS1D:
    """τᵢ(x) = λ(x + i), i ∈ {0,1}, with weights (½, ½)."""

    lam: Scale
    eps: float = DEFAULT_EPS
    budget: int | None = None

    def __post_init__(self):
        if not 0 < float(self.lam) < 1:
            raise ValueError("lambda must lie in (0,1)")
        if is_exact_scale(self.lam) and not (0 < self.lam < 1):
            raise ValueError("lambda must lie in (0,1)")

    @classmethod
    def from_spec(cls, spec, exact: bool | None = None, **kw) -> IFS1D:
        return cls(parse_lambda(spec, exact), **kw)

    @property
    def exact(self) -> bool:
        return is_exact_scale(self.lam)

    @property
    def max_depth(self) -> int:
        if self.budget is not None:
            return self.budget
        return EXACT_BUDGET if self.exact else FLOAT_BUDGET

    def check_budget(self, n: int) -> None:
        if n < 0:
            raise ValueError("depth must be non-negative")
        if n > self.max_depth:
            raise BudgetExceeded(f"depth {n} exceeds enumeration budget {self.max_depth}")

    @property
    def one(self):
        return self.lam.field(1) if self.exact else 1.0

    @property
    def b(self):
        """Right endpoint of the attractor [0, λ/(1−λ)]."""
        return self.lam / (1 - self.lam)

    @property
    def case(self) -> str:
        lam = self.lam
        half = Fraction(1, 2) if self.exact else 0.5
        if lam < half:
            return "cantor"
        if lam == half:
            return "lebesgue"
        return "overlap"

    @property
    def overlap_interval(self) -> tuple:
        """[λ, λ²/(1−λ)]; nonempty only for λ > ½."""
        return self.lam, self.lam * self.lam / (1 - self.lam)

    def tau(self, i: int, x):
        return self.lam * (x + i)

    def sigma(self, i: int, x):
        """Inverse branch of τᵢ."""
        return x / self.lam - i

    def tail(self, n: int):
        """Radius λⁿ⁺¹/(1−λ) of the reachable set of a length-n prefix."""
        return self.lam ** (n + 1) / (1 - self.lam)

    def powers(self, n: int) -> list:
        out, p = [], self.lam
        for _ in range(n):
            out.append(p)
            p = p * self.lam
        return out


# ---------------------------------------------------------------------------
# node sets


@dataclass(frozen=True)
class NodeSet:
    """The multiset {Σ ωᵢλⁱ : ω ∈ {0,1}ⁿ} as sorted distinct values with counts."""

    level: int
    values: Sequence
    counts: Sequence

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(sum(int(c) for c in self.counts))

    @property
    def exact(self) -> bool:
        return not isinstance(self.values, np.ndarray)

    def float_values(self) -> np.ndarray:
        if not self.exact:
            return self.values
        return np.array([float(v) for v in self.values])

    def multiplicities(self) -> dict:
        out: dict[int, int] = {}
        for c in self.counts:
            out[int(c)] = out.get(int(c), 0) + 1
        return out

    def measure(self) -> AtomicMeasure:
        """Uniform measure on the 2ⁿ nodes, i.e. Tⁿδ₀."""
        if self.exact:
            d = 2**self.level
            return AtomicMeasure(
                self.values, tuple(Fraction(int(c), d) for c in self.counts), consolidated=True
            )
        return AtomicMeasure(self.values, np.asarray(self.counts) / 2.0**self.level, consolidated=True)

    def cdf(self) -> StepFunction:
        cum = np.concatenate([[0], np.cumsum(np.asarray(self.counts, dtype=np.int64))])
        if self.exact:
            d = 2**self.level
            return StepFunction(self.values, tuple(Fraction(int(c), d) for c in cum))
        return StepFunction(self.values, cum / 2.0**self.level)


def _lattice_powers(lam: QuadNumber, n: int) -> tuple[list[tuple[int, int]], int]:
    """λ¹..λⁿ as integer pairs (A, B) over a common denominator D: λᵏ = (A + Bλ)/D."""
    pw = []
    p = lam
    for _ in range(n):
        pw.append(p)
        p = p * lam
    den = 1
    for q in pw:
        den = math.lcm(den, q.a.denominator, q.b.denominator)
    return [(int(q.a * den), int(q.b * den)) for q in pw], den


def _sorted_lattice(points: dict, lam: QuadNumber, den: int) -> tuple[list, list]:
    """Sort lattice points (A, B) ↦ (A + Bλ)/D exactly and return (values, counts)."""
    lf = float(lam)
    keys = sorted(points, key=lambda ab: ab[0] + ab[1] * lf)
    # float sort is correct whenever adjacent gaps are well above rounding; repair otherwise
    for k in range(len(keys) - 1):
        (a0, b0), (a1, b1) = keys[k], keys[k + 1]
        da, db = a1 - a0, b1 - b0
        approx = da + db * lf
        if abs(approx) <= 1e-9 * (abs(da) + abs(db)):
            vals = [lam.field(Fraction(a, den), Fraction(b, den)) for a, b in keys]
            order = sort_exact(vals)
            keys = [keys[i] for i in order]
            break
    vals = tuple(lam.field(Fraction(a, den), Fraction(b, den)) for a, b in keys)
    return vals, [points[k] for k in keys]


def node_set(ifs: IFS1D, n: int) -> NodeSet:
    """N_n(λ) with multiplicities by the outer sum S_{k+1} = S_k ∪ (S_k + λᵏ⁺¹).

    Each level is consolidated before the next is built, so the work is
    proportional to the number of distinct partial sums.
    """
    ifs.check_budget(n)
    if ifs.exact:
        pw, den = _lattice_powers(ifs.lam, n)
        level: dict = {(0, 0): 1}
        for a, b in pw:
            nxt = dict(level)
            for (x, y), c in level.items():
                key = (x + a, y + b)
                nxt[key] = nxt.get(key, 0) + c
            level = nxt
        vals, counts = _sorted_lattice(level, ifs.lam, den)
        return NodeSet(n, vals, tuple(counts))
    values = np.array([0.0])
    counts = np.array([1], dtype=np.int64)
    for p in ifs.powers(n):
        v = np.concatenate([values, values + p])
        c = np.concatenate([counts, counts])
        order = np.argsort(v, kind="stable")
        v, c = v[order], c[order]
        starts = np.flatnonzero(np.concatenate([[True], np.diff(v) > ifs.eps]))
        values, counts = v[starts], np.add.reduceat(c, starts)
    return NodeSet(n, values, counts)


def node_set_naive(ifs: IFS1D, n: int) -> NodeSet:
    """Per-word re-summation of N_n(λ); kept as a reference for the outer sum."""
    ifs.check_budget(n)
    pw = ifs.powers(n)
    if ifs.exact:
        acc: dict = {}
        for k in range(2**n):
            s = ifs.lam.field(0)
            for i in range(n):
                if (k >> (n - 1 - i)) & 1:
                    s = s + pw[i]
            acc[s] = acc.get(s, 0) + 1
        vals = list(acc)
        order = sort_exact(vals)
        return NodeSet(n, tuple(vals[i] for i in order), tuple(acc[vals[i]] for i in order))
    from .core import all_words

    words = all_words(n).astype(float)
    sums = words @ np.array(pw, dtype=float) if n else np.zeros(1)
    m = consolidate(AtomicMeasure(sums, np.ones_like(sums)), eps=ifs.eps)
    return NodeSet(n, m.points, np.rint(m.weights).astype(np.int64))


# ---------------------------------------------------------------------------
# cascade approximants


def cascade_cdf(ifs: IFS1D, n: int, route: str = "recursion") -> StepFunction:
    """F_n from the Heaviside function by F_{k+1}(x) = ½(F_k(x/λ) + F_k((x−λ)/λ)).

    ``route="nodes"`` instead returns the CDF of the uniform measure on N_n(λ);
    the two routes are independent constructions of the same function.
    """
    if route == "nodes":
        return node_set(ifs, n).cdf()
    if route != "recursion":
        raise ValueError(f"unknown route {route!r}")
    ifs.check_budget(n)
    if ifs.exact:
        return _cascade_exact(ifs, n)
    return _cascade_float(ifs, n)


def _cascade_exact(ifs: IFS1D, n: int) -> StepFunction:
    F = None
    for F in _cascade_exact_levels(ifs, n):
        pass
    return F


def _cascade_exact_levels(ifs: IFS1D, n: int):
    """Yield F_0, …, F_n exactly.

    F(x/λ) jumps at λ·bp and F((x−λ)/λ) at λ·(bp+1); walking the sorted union
    and remembering the last position seen in each list gives both counts
    without any division or bisection.
    """
    lam = ifs.lam
    one = lam.field(1)
    bp: tuple = (lam.field(0),)
    num = [0, 1]
    yield StepFunction(bp, tuple(Fraction(v) for v in num))
    for k in range(1, n + 1):
        b0 = [lam * x for x in bp]
        b1 = [lam * (x + one) for x in bp]
        pos0 = {x: i for i, x in enumerate(b0)}
        pos1 = {x: i for i, x in enumerate(b1)}
        cand = list(pos0.keys() | pos1.keys())
        cand = [cand[i] for i in sort_exact(cand)]
        c0 = c1 = 0
        nxt = [0]
        for x in cand:
            if x in pos0:
                c0 = pos0[x] + 1
            if x in pos1:
                c1 = pos1[x] + 1
            nxt.append(num[c0] + num[c1])
        bp, num = tuple(cand), nxt
        d = 2**k
        yield StepFunction(bp, tuple(Fraction(v, d) for v in num))


def _cascade_float(ifs: IFS1D, n: int) -> StepFunction:
    # Values are kept as integer numerators over 2ᵏ so monotonicity checks are exact.
    lam, eps = float(ifs.lam), ifs.eps
    bp = np.array([0.0])
    num = np.array([0, 1], dtype=np.int64)
    for _ in range(n):
        # F(x/λ) has its jumps at λ·bp, F((x−λ)/λ) at λ·(bp+1): transport the
        # breakpoints instead of dividing the argument, which would round.
        b0, b1 = lam * bp, lam * (bp + 1.0)
        cand = np.sort(np.concatenate([b0, b1]))
        new_run = np.concatenate([[True], np.diff(cand) > eps])
        starts = np.flatnonzero(new_run)
        ends = np.concatenate([starts[1:], [cand.size]]) - 1
        reps, probe = cand[starts], cand[ends]
        v = num[np.searchsorted(b0, probe, side="right")] + num[np.searchsorted(b1, probe, side="right")]
        bp = reps
        num = np.concatenate([[0], v])
    return StepFunction(bp, num / 2.0**n)


def step_dominates(upper: StepFunction, lower: StepFunction) -> bool:
    """lower(x) ≤ upper(x) at every breakpoint of either function.

    Exact functions are merged with a hash walk over the exactly sorted union
    of breakpoints, so no order comparison is repeated per point.
    """
    if not (upper.exact and lower.exact):
        x = np.union1d(upper.float_breakpoints(), lower.float_breakpoints())
        return bool(np.all(lower(x) <= upper(x)))
    pu = {x: i for i, x in enumerate(upper.breakpoints)}
    pl = {x: i for i, x in enumerate(lower.breakpoints)}
    pts = list(pu.keys() | pl.keys())
    pts = [pts[i] for i in sort_exact(pts)]
    iu = il = 0
    for x in pts:
        if x in pu:
            iu = pu[x] + 1
        if x in pl:
            il = pl[x] + 1
        if lower.values[il] > upper.values[iu]:
            return False
    return True


def cascade_counts(F: StepFunction, n: int) -> np.ndarray:
    """Integer numerators 2ⁿ·F_n of a float cascade approximant."""
    return np.rint(F.float_values() * 2.0**n).astype(np.int64)


def cascade_sequence(ifs: IFS1D, n: int) -> list[StepFunction]:
    """[F_0, …, F_n]."""
    ifs.check_budget(n)
    if ifs.exact:
        return list(_cascade_exact_levels(ifs, n))
    return [cascade_cdf(ifs, k) for k in range(n + 1)]


def scaling_residual(ifs: IFS1D, F: StepFunction, grid: np.ndarray) -> float:
    """max over ``grid`` of |F(x) − ½(F(x/λ) + F((x−λ)/λ))|."""
    lam = float(ifs.lam)
    g = np.asarray(grid, dtype=float)
    rhs = 0.5 * (F(g / lam) + F((g - lam) / lam))
    return float(np.max(np.abs(F(g) - rhs)))


# ---------------------------------------------------------------------------
# encoding, Hutchinson operator, d₁


def encode_point(ifs: IFS1D, w: Word | Sequence[int]):
    """(Σ wᵢλⁱ, λⁿ⁺¹/(1−λ)): every extension of ``w`` encodes into [value, value + tail]."""
    digits = w.digits if isinstance(w, Word) else tuple(w)
    if any(d not in (0, 1) for d in digits):
        raise ValueError("binary word required")
    value = ifs.lam.field(0) if ifs.exact else 0.0
    p = ifs.lam
    for d in digits:
        if d:
            value = value + p
        p = p * ifs.lam
    return value, ifs.tail(len(digits))


def hutchinson_step(ifs: IFS1D, m: AtomicMeasure) -> AtomicMeasure:
    """Tν = ½(ν∘τ₀⁻¹ + ν∘τ₁⁻¹), consolidated."""
    lam = ifs.lam
    if m.exact:
        pts = tuple(lam * p for p in m.points) + tuple(lam * (p + 1) for p in m.points)
        wts = tuple(w / 2 for w in m.weights) * 2
        return consolidate(AtomicMeasure(pts, wts))
    p = m.points
    lamf = float(lam)
    pts = np.concatenate([lamf * p, lamf * (p + 1.0)])
    wts = np.concatenate([m.weights, m.weights]) / 2.0
    return consolidate(AtomicMeasure(pts, wts), eps=ifs.eps)


def hutchinson_iterate(ifs: IFS1D, nu0: AtomicMeasure, n: int) -> AtomicMeasure:
    """Tⁿν₀; for ν₀ = δ₀ this is the uniform measure on N_n(λ)."""
    ifs.check_budget(n)
    if ifs.exact != nu0.exact:
        raise ValueError("measure and IFS must both be exact or both be float")
    m = nu0 if nu0.consolidated else consolidate(nu0)
    for _ in range(n):
        m = hutchinson_step(ifs, m)
    return m


def d1_distance(a: AtomicMeasure, b: AtomicMeasure):
    """∫|F_a − F_b| dx over the merged atom grid.

    Exact inputs give an exact result in Q(λ) (or Q); float inputs a float.
    """
    for m in (a, b):
        if m.dim != 1:
            raise ValueError("d1 is defined for 1D measures only")
        tw = m.total_weight
        if (m.exact and tw != 1) or (not m.exact and abs(tw - 1.0) > 1e-9):
            raise ValueError("d1 requires probability measures")
    if a.exact and b.exact:
        return _d1_exact(a, b)
    Fa, Fb = a.cdf(), b.cdf()
    grid = np.union1d(a.float_points(), b.float_points())
    if grid.size < 2:
        return 0.0
    diff = np.abs(Fa(grid[:-1]) - Fb(grid[:-1]))
    return float(np.sum(diff * np.diff(grid)))


def _d1_exact(a: AtomicMeasure, b: AtomicMeasure):
    a, b = consolidate(a), consolidate(b)
    pts = list(set(a.points) | set(b.points))
    order = sort_exact(pts)
    pts = [pts[i] for i in order]
    wa = dict(zip(a.points, a.weights))
    wb = dict(zip(b.points, b.weights))
    total = 0
    Fa = Fb = Fraction(0)
    for x, y in zip(pts, pts[1:]):
        Fa += wa.get(x, 0)
        Fb += wb.get(x, 0)
        total = total + abs(Fa - Fb) * (y - x)
    return total
