"""Radon–Nikodym derivatives φᵢ = d(μ∘τᵢ⁻¹)/dμ and the operators they drive.

With Fᵢf = (1/√2) f∘τᵢ on L²(μ), the adjoint is
(Fᵢ*f)(x) = (1/√2) φᵢ(x) f(σᵢx), and the range projection 𝔽𝔽* is the 2×2
block operator with entries ½ φⱼ(τᵢx) f(x + i − j).  On the overlap the
φᵢ are values of the distribution function F, which is replaced by the
depth-n cascade approximant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cascade import IFS1D, cascade_cdf, node_set
from .core import AtomicMeasure, StepFunction

SQRT_HALF = np.sqrt(0.5)

Func = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Radon–Nikodym derivatives


@dataclass(frozen=True)
class RNDerivative:
    """φᵢ backed by a depth-n approximant of the distribution function."""

    i: int
    ifs: IFS1D
    F: StepFunction
    depth: int

    def __post_init__(self):
        if self.i not in (0, 1):
            raise ValueError("index must be 0 or 1")

    def __call__(self, x) -> np.ndarray:
        return rn_values(self, np.asarray(x, dtype=float))

    def evaluate(self, x, *, check_domain: bool = True) -> RNResult:
        return rn_eval(self, x, check_domain=check_domain)


@dataclass(frozen=True)
class RNResult:
    values: np.ndarray
    uncertain: np.ndarray  # within one tail radius of a piece boundary
    depth: int


def rn_pair(ifs: IFS1D, n: int) -> tuple[RNDerivative, RNDerivative]:
    """(φ₀, φ₁) backed by the float cascade approximant F_n."""
    flt = IFS1D(float(ifs.lam), ifs.eps)
    F = cascade_cdf(flt, n)
    return RNDerivative(0, flt, F, n), RNDerivative(1, flt, F, n)


def rn_values(d: RNDerivative, x: np.ndarray) -> np.ndarray:
    """φᵢ(x); points off [0, b] get 0 (φᵢ is supported in X)."""
    lam = float(d.ifs.lam)
    b = lam / (1 - lam)
    eps = d.ifs.eps
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside_X = (x >= -eps) & (x <= b + eps)
    if lam <= 0.5:
        # τ₀X and τ₁X meet at most in a point: φᵢ = 2·1_{τᵢX}
        left = x < lam
        out = np.where(inside_X & (left if d.i == 0 else ~left), 2.0, 0.0)
        return out
    c = lam * lam / (1 - lam)
    below = x < lam
    above = x > c
    mid = inside_X & ~below & ~above
    if d.i == 0:
        u = (lam * lam - x * (1 - lam)) / ((1 - lam) * (2 * lam - 1))
        out = np.where(inside_X & below, 2.0, 0.0)
    else:
        u = (x - lam) / (2 * lam - 1)
        out = np.where(inside_X & above, 2.0, 0.0)
    if np.any(mid):
        out = np.where(mid, 2.0 * d.F(np.where(mid, u, 0.0)), out)
    return out


def rn_eval(d: RNDerivative, x, *, check_domain: bool = True) -> RNResult:
    """φᵢ(x) with an uncertainty flag near λ and λ²/(1−λ).

    The flag marks points within λⁿ⁺¹/(1−λ) of a piece boundary, where the
    approximant's jumps have not settled.
    """
    lam = float(d.ifs.lam)
    b = lam / (1 - lam)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if check_domain and (np.any(xa < -d.ifs.eps) or np.any(xa > b + d.ifs.eps)):
        raise ValueError("x outside the attractor [0, b]")
    vals = rn_values(d, xa)
    tail = lam ** (d.depth + 1) / (1 - lam)
    c = lam * lam / (1 - lam)
    flag = (np.abs(xa - lam) < tail) | (np.abs(xa - c) < tail)
    return RNResult(vals, flag, d.depth)


def rn_sum_check(ifs: IFS1D, n: int, grid) -> float:
    """max over the grid of |φ₀(x) + φ₁(x) − 2|."""
    if ifs.case != "overlap":
        raise ValueError("rn_sum_check needs lambda > 1/2")
    p0, p1 = rn_pair(ifs, n)
    g = np.asarray(grid, dtype=float)
    return float(np.max(np.abs(p0(g) + p1(g) - 2.0)))


def lebesgue_pair(ifs: IFS1D) -> tuple[Func, Func]:
    """(1/λ)·1_{τᵢX}: the densities of Lebesgue measure under τᵢ, used as a contrast."""
    lam = float(ifs.lam)
    b = lam / (1 - lam)

    def psi0(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0) & (x <= lam * b), 1 / lam, 0.0)

    def psi1(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= lam) & (x <= b), 1 / lam, 0.0)

    return psi0, psi1


# ---------------------------------------------------------------------------
# function pairs on L²(μ) ⊕ L²(μ)


@dataclass
class TranslationCounter:
    """Counts evaluations where a unit translation left [0, b] and contributed 0."""

    exits: int = 0

    def note(self, mask: np.ndarray) -> None:
        self.exits += int(np.count_nonzero(mask))


@dataclass(frozen=True)
class FunctionPair:
    """(f₀, f₁) as vectorised callables, evaluated lazily on quadrature atoms."""

    f0: Func
    f1: Func

    def __call__(self, x):
        return self.f0(x), self.f1(x)

    def sample(self, m: AtomicMeasure) -> SampledFunctionPair:
        x = m.float_points()
        return SampledFunctionPair(m, np.asarray(self.f0(x), dtype=float), np.asarray(self.f1(x), dtype=float))

    def scale(self, c: float) -> FunctionPair:
        return FunctionPair(lambda x: c * self.f0(x), lambda x: c * self.f1(x))

    def __sub__(self, other: FunctionPair) -> FunctionPair:
        return FunctionPair(lambda x: self.f0(x) - other.f0(x), lambda x: self.f1(x) - other.f1(x))


@dataclass(frozen=True)
class SampledFunctionPair:
    measure: AtomicMeasure
    v0: np.ndarray
    v1: np.ndarray

    def __post_init__(self):
        if len(self.v0) != len(self.measure) or len(self.v1) != len(self.measure):
            raise ValueError("value vectors must match the atom count")

    def norm(self) -> float:
        w = self.measure.float_weights()
        return float(np.sqrt(np.sum(w * (np.abs(self.v0) ** 2 + np.abs(self.v1) ** 2))))


def zero_extended(f: Func, b: float, eps: float, counter: TranslationCounter | None = None) -> Func:
    """f on [0, b], 0 outside (for translated arguments)."""

    def g(x):
        x = np.asarray(x, dtype=float)
        ok = (x >= -eps) & (x <= b + eps)
        if counter is not None:
            counter.note(~ok)
        return np.where(ok, f(np.where(ok, x, 0.0)), 0.0)

    return g


def apply_adjoint(ifs: IFS1D, phi: RNDerivative, f: Func) -> Func:
    """Fᵢ*f = (1/√2) φᵢ · f∘σᵢ on τᵢX, and 0 elsewhere."""
    lam = float(ifs.lam)
    b = lam / (1 - lam)
    i = phi.i
    fz = zero_extended(f, b, ifs.eps)

    def g(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < -ifs.eps) or np.any(x > b + ifs.eps):
            raise ValueError("atom outside the attractor")
        lo, hi = (0.0, lam * b) if i == 0 else (lam, b)
        on = (x >= lo - ifs.eps) & (x <= hi + ifs.eps)
        return np.where(on, SQRT_HALF * phi(x) * fz(x / lam - i), 0.0)

    return g


def apply_isometry(ifs: IFS1D, i: int, f: Func) -> Func:
    """Fᵢf = (1/√2) f∘τᵢ."""
    lam = float(ifs.lam)
    return lambda x: SQRT_HALF * f(lam * (np.asarray(x, dtype=float) + i))


def range_projection(
    ifs: IFS1D, phis: tuple[RNDerivative, RNDerivative], pair: FunctionPair, counter: TranslationCounter | None = None
) -> FunctionPair:
    """𝔽𝔽* applied to a pair: ½[[φ₀∘τ₀, (φ₁∘τ₀)T₋₁], [(φ₀∘τ₁)T₁, φ₁∘τ₁]].

    (T±₁f)(x) = f(x ± 1), with 0 wherever x ± 1 leaves [0, b].
    """
    lam = float(ifs.lam)
    b = lam / (1 - lam)
    p0, p1 = phis
    f0, f1 = pair.f0, pair.f1
    f0_shift = zero_extended(f0, b, ifs.eps, counter)
    f1_shift = zero_extended(f1, b, ifs.eps, counter)

    def g0(x):
        x = np.asarray(x, dtype=float)
        y = lam * x
        return 0.5 * (p0(y) * f0(x) + p1(y) * f1_shift(x - 1.0))

    def g1(x):
        x = np.asarray(x, dtype=float)
        y = lam * (x + 1.0)
        return 0.5 * (p0(y) * f0_shift(x + 1.0) + p1(y) * f1(x))

    return FunctionPair(g0, g1)


def range_projection_apply(
    ifs: IFS1D, phis, pair: SampledFunctionPair | FunctionPair, measure: AtomicMeasure | None = None
) -> tuple[SampledFunctionPair, int]:
    """𝔽𝔽* on a pair, sampled on the quadrature atoms; returns (result, translation exits)."""
    if isinstance(pair, SampledFunctionPair):
        measure = pair.measure
        pair = _interpolating_pair(pair)
    if measure is None:
        raise ValueError("a quadrature measure is required")
    counter = TranslationCounter()
    out = range_projection(ifs, phis, pair, counter).sample(measure)
    return out, counter.exits


def _interpolating_pair(s: SampledFunctionPair) -> FunctionPair:
    """Extend sampled values to a right-continuous step function on the line."""
    pts = s.measure.float_points()
    order = np.argsort(pts)
    pts = pts[order]

    def make(v):
        v = v[order]

        def f(x):
            idx = np.clip(np.searchsorted(pts, np.asarray(x, dtype=float), side="right") - 1, 0, pts.size - 1)
            return v[idx]

        return f

    return FunctionPair(make(s.v0), make(s.v1))


def defect_vector(ifs: IFS1D, phis) -> FunctionPair:
    """(φ₁∘τ₀, −φ₀∘τ₁), orthogonal to the range of 𝔽."""
    lam = float(ifs.lam)
    p0, p1 = phis
    return FunctionPair(
        lambda x: p1(lam * np.asarray(x, dtype=float)),
        lambda x: -p0(lam * (np.asarray(x, dtype=float) + 1.0)),
    )


def pair_norm(pair: FunctionPair, m: AtomicMeasure) -> float:
    return pair.sample(m).norm()


def quadrature_measure(ifs: IFS1D, n: int) -> AtomicMeasure:
    """μ_n = Tⁿδ₀ in float form."""
    return node_set(IFS1D(float(ifs.lam), ifs.eps), n).measure()


def defect_residual(ifs: IFS1D, n: int) -> dict:
    """‖𝔽𝔽*f‖/‖f‖ for the defect vector f, in L²(μ_n)."""
    phis = rn_pair(ifs, n)
    m = quadrature_measure(ifs, n)
    f = defect_vector(ifs, phis)
    nf = pair_norm(f, m)
    out, exits = range_projection_apply(ifs, phis, f, m)
    ratio = out.norm() / nf if nf > 0 else 0.0
    return {"norm": nf, "projected_norm": out.norm(), "ratio": ratio, "translation_exits": exits, "depth": n}


def random_pairs(count: int, seed: int = 7, degree: int = 4) -> list[FunctionPair]:
    """Smooth random test pairs: random trigonometric polynomials in each slot."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        coef = rng.standard_normal((2, 2, degree + 1))
        freq = np.arange(degree + 1)

        def mk(c):
            def f(x):
                x = np.asarray(x, dtype=float)[..., None]
                return np.sum(c[0] * np.cos(freq * x) + c[1] * np.sin(freq * x), axis=-1)

            return f

        pairs.append(FunctionPair(mk(coef[0]), mk(coef[1])))
    return pairs


def projection_identity_check(ifs: IFS1D, n: int, samples: int = 32, seed: int = 7) -> float:
    """max over random pairs p of ‖(𝔽𝔽*)²p − 𝔽𝔽*p‖ / ‖p‖ in L²(μ_n)."""
    phis = rn_pair(ifs, n)
    m = quadrature_measure(ifs, n)
    worst = 0.0
    for p in random_pairs(samples, seed):
        q = range_projection(ifs, phis, p)
        qq = range_projection(ifs, phis, q)
        np_ = pair_norm(p, m)
        if np_ == 0:
            continue
        worst = max(worst, pair_norm(qq - q, m) / np_)
    return worst


# ---------------------------------------------------------------------------
# column-isometry identities


def column_isometry_defect(ifs: IFS1D, f: Callable, n: int) -> tuple:
    """(½Σᵢ‖f∘τᵢ‖²_{μ_n}, ‖f‖²_{μ_{n+1}}) computed independently.

    Exact IFSs evaluate ``f`` on Q(λ) atoms with rational weights, so the two
    numbers agree exactly; float IFSs agree to rounding.
    """
    mn = node_set(ifs, n).measure()
    mn1 = node_set(ifs, n + 1).measure()
    lam = ifs.lam
    if ifs.exact:
        lhs = 0
        for x, w in zip(mn.points, mn.weights):
            lhs = lhs + w * (f(lam * x) ** 2 + f(lam * (x + 1)) ** 2) / 2
        rhs = 0
        for x, w in zip(mn1.points, mn1.weights):
            rhs = rhs + w * f(x) ** 2
        return lhs, rhs
    lamf = float(lam)
    x, w = mn.points, mn.weights
    lhs = 0.5 * float(np.sum(w * (np.abs(f(lamf * x)) ** 2 + np.abs(f(lamf * (x + 1))) ** 2)))
    rhs = float(np.sum(mn1.weights * np.abs(f(mn1.points)) ** 2))
    return lhs, rhs


def density_identity_defect(ifs: IFS1D, densities: tuple[Func, Func], f: Func, n: int) -> float:
    """|½Σᵢ∫ψᵢ|f|² dμ_{n+1} − ½Σᵢ‖f∘τᵢ‖²_{μ_n}| / ‖f‖²_{μ_{n+1}}.

    Near zero when ψᵢ are the true Radon–Nikodym derivatives; with Lebesgue
    reference densities the column-isometry identity visibly fails.
    """
    lhs, _ = column_isometry_defect(IFS1D(float(ifs.lam), ifs.eps), f, n)
    m1 = quadrature_measure(ifs, n + 1)
    x, w = m1.points, m1.weights
    fx2 = np.abs(f(x)) ** 2
    via_density = 0.5 * float(np.sum(w * (densities[0](x) + densities[1](x)) * fx2))
    denom = float(np.sum(w * fx2))
    return abs(via_density - lhs) / denom


def lebesgue_contrast(ifs: IFS1D, n: int, family: list[Func] | None = None) -> dict:
    """Max density-identity defect over a test family, for true φ and for Lebesgue densities."""
    if family is None:
        family = [lambda x, k=k: np.asarray(x, dtype=float) ** k for k in range(4)]
        family += [lambda x, k=k: np.cos(k * np.asarray(x, dtype=float)) for k in (1, 2, 3)]
    phis = rn_pair(ifs, n)
    leb = lebesgue_pair(ifs)
    return {
        "rn": max(density_identity_defect(ifs, phis, f, n) for f in family),
        "lebesgue": max(density_identity_defect(ifs, leb, f, n) for f in family),
        "depth": n,
    }


@dataclass
class TransferSummary:
    lam: float
    depth: int
    checks: dict = field(default_factory=dict)
