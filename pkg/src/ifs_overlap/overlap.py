"""How much of μ_λ sits in the overlap τ₀(X) ∩ τ₁(X) = [λ, λ²/(1−λ)].

Rigorous enclosures come from classifying binary prefixes by their reachable
interval [value, value + tail].  A prefix whose interval lies inside the
target contributes its full cylinder mass; one that misses it contributes
nothing; only straddling prefixes are refined.  This gives exactly the counts
of a full 2ⁿ enumeration while touching only the straddling prefixes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .cascade import IFS1D
from .core import BudgetExceeded, MeasureBound, Scale, is_exact_scale
from .quadratic import QuadNumber

ENCLOSURE_MAX_DEPTH = 64
ENCLOSURE_MAX_FRONTIER = 4_000_000
FLOAT_MARGIN = 1e-12


# ---------------------------------------------------------------------------
# rigorous enclosures


def _classify_float(v: np.ndarray, tail: float, left: float, right: float, delta: float):
    """Inside/outside masks for reachable intervals [v, v+tail] against [left, right].

    Anything within ``delta`` of a decision boundary counts as straddling.
    """
    inside = (v >= left + delta) & (v + tail <= right - delta)
    outside = (v > right + delta) | (v + tail < left - delta)
    return inside, outside


def interval_enclosure(ifs: IFS1D, n: int, left, right, *, max_frontier: int = ENCLOSURE_MAX_FRONTIER) -> MeasureBound:
    """Enclose μ_λ([left, right]) by depth-n cylinder counting.

    Returns [inside·2⁻ⁿ, (inside + straddling)·2⁻ⁿ] where a length-n word is
    inside when [π_n(w), π_n(w) + λⁿ⁺¹/(1−λ)] ⊆ [left, right] and outside when
    the two are disjoint.  Prefixes with equal values are merged.
    """
    if n < 0:
        raise ValueError("depth must be non-negative")
    if n > ENCLOSURE_MAX_DEPTH:
        raise BudgetExceeded(f"enclosure depth {n} exceeds {ENCLOSURE_MAX_DEPTH}")
    if ifs.exact:
        return _enclosure_exact(ifs, n, left, right, max_frontier)
    return _enclosure_float(ifs, n, float(left), float(right), max_frontier)


def _enclosure_float(ifs, n, left, right, max_frontier) -> MeasureBound:
    lam = float(ifs.lam)
    delta = FLOAT_MARGIN
    values = np.array([0.0])
    counts = np.array([1], dtype=np.int64)
    inside_mass = Fraction(0)
    p = lam
    for k in range(n + 1):
        tail = lam ** (k + 1) / (1 - lam)
        ins, out = _classify_float(values, tail, left, right, delta)
        if ins.any():
            inside_mass += Fraction(int(counts[ins].sum()), 2**k)
        keep = ~(ins | out)
        values, counts = values[keep], counts[keep]
        if k == n or values.size == 0:
            break
        v = np.concatenate([values, values + p])
        c = np.concatenate([counts, counts])
        # merge prefixes whose float values coincide exactly
        uniq, inv = np.unique(v, return_inverse=True)
        values, counts = uniq, np.bincount(inv.ravel(), weights=c).astype(np.int64)
        if values.size > max_frontier:
            raise BudgetExceeded(f"frontier of {values.size} prefixes at level {k + 1}")
        p *= lam
    straddle = Fraction(int(counts.sum()), 2**n) if values.size else Fraction(0)
    return MeasureBound(
        inside_mass, inside_mass + straddle, n, {"frontier": int(values.size), "margin": delta}
    )


def _enclosure_exact(ifs, n, left, right, max_frontier) -> MeasureBound:
    lam: QuadNumber = ifs.lam
    field = lam.field
    left, right = field(0) + left, field(0) + right
    fl, fr = float(left), float(right)
    inside_mass = Fraction(0)
    frontier: dict = {field(0): 1}
    p = lam
    one_minus = 1 - lam
    for k in range(n + 1):
        tail = lam ** (k + 1) / one_minus
        ft = float(tail)
        nxt_keep = {}
        ins_count = 0
        for v, c in frontier.items():
            fv = float(v)
            # float screening; borderline cases fall through to exact comparisons
            if fv > fl + 1e-9 and fv + ft < fr - 1e-9:
                ins_count += c
                continue
            if fv > fr + 1e-9 or fv + ft < fl - 1e-9:
                continue
            if left <= v and v + tail <= right:
                ins_count += c
            elif right < v or v + tail < left:
                continue
            else:
                nxt_keep[v] = c
        if ins_count:
            inside_mass += Fraction(ins_count, 2**k)
        frontier = nxt_keep
        if k == n or not frontier:
            break
        nxt: dict = {}
        for v, c in frontier.items():
            nxt[v] = nxt.get(v, 0) + c
            w = v + p
            nxt[w] = nxt.get(w, 0) + c
        frontier = nxt
        if len(frontier) > max_frontier:
            raise BudgetExceeded(f"frontier of {len(frontier)} prefixes at level {k + 1}")
        p = p * lam
    straddle = Fraction(sum(frontier.values()), 2**n) if frontier else Fraction(0)
    return MeasureBound(inside_mass, inside_mass + straddle, n, {"frontier": len(frontier)})


def overlap_enclosure(ifs: IFS1D, n: int) -> MeasureBound:
    """Enclosure of μ_λ([λ, λ²/(1−λ)])."""
    if ifs.case != "overlap":
        raise ValueError("no essential overlap for lambda <= 1/2")
    lo, hi = ifs.overlap_interval
    return interval_enclosure(ifs, n, lo, hi)


def tau1_enclosure(ifs: IFS1D, n: int) -> MeasureBound:
    """Enclosure of μ_λ(τ₁X) = μ_λ([λ, b])."""
    return interval_enclosure(ifs, n, ifs.lam, ifs.b)


def overlap_from_tau1(ifs: IFS1D, n: int) -> MeasureBound:
    """μ(overlap) = 2μ(τ₁X) − 1, propagated through the τ₁X enclosure."""
    return tau1_enclosure(ifs, n).scale_shift(2, -1)


@dataclass(frozen=True)
class OverlapReport1D:
    lam: Scale
    overlap_interval: tuple
    enclosure: MeasureBound
    tau1: MeasureBound
    cross_check: MeasureBound
    lower_bound: Fraction
    m: int
    lebesgue_overlap: object
    depth: int

    def to_json(self) -> dict:
        return {
            "overlap_interval": [float(x) for x in self.overlap_interval],
            "enclosure": self.enclosure.to_json(),
            "tau1_enclosure": self.tau1.to_json(),
            "overlap_from_tau1": self.cross_check.to_json(),
            "lower_bound": str(self.lower_bound),
            "lower_bound_m": self.m,
            "lebesgue_overlap": float(self.lebesgue_overlap),
            "depth": self.depth,
        }


def overlap_report(ifs: IFS1D, n: int) -> OverlapReport1D:
    enc = overlap_enclosure(ifs, n)
    t1 = tau1_enclosure(ifs, n)
    lb, m = overlap_lower_bound(ifs.lam)
    return OverlapReport1D(
        ifs.lam, ifs.overlap_interval, enc, t1, t1.scale_shift(2, -1), lb, m, lebesgue_overlap(ifs.lam), n
    )


# ---------------------------------------------------------------------------
# closed-form quantities


def _check_overlap_range(lam) -> None:
    half = Fraction(1, 2) if is_exact_scale(lam) else 0.5
    if not (half < lam < 1):
        raise ValueError("lambda must lie in (1/2, 1)")


def overlap_lower_bound(lam: Scale, eps: float = 1e-12) -> tuple[Fraction, int]:
    """(1/(2ᵐ − 1), m) with m minimal such that λ + λ² + ⋯ + λᵐ ≥ 1.

    For λ at or above (√5−1)/2 this is m = 2 and the bound 1/3.  Exact λ is
    compared exactly; float λ gets ``eps`` slack so golden-ratio floats land on m = 2.
    """
    _check_overlap_range(lam)
    exact = is_exact_scale(lam)
    s, p, m = 0, 1, 0
    while True:
        m += 1
        p = p * lam
        s = s + p
        if (s >= 1) if exact else (s >= 1 - eps):
            return Fraction(1, 2**m - 1), m


def lebesgue_overlap(lam: Scale):
    """Lebesgue length λ(2λ−1)/(1−λ) of the overlap interval."""
    _check_overlap_range(lam)
    return lam * (2 * lam - 1) / (1 - lam)


def moments(lam: Scale, k: int) -> list:
    """[M₀, …, M_k] from M_k = λᵏ Σ_{j<k} C(k,j) M_j / (2(1 − λᵏ)).

    Taking x ↦ xᵏ in μ = ½(μ∘τ₀⁻¹ + μ∘τ₁⁻¹) gives
    M_k = ½λᵏ(M_k + Σ_j C(k,j) M_j), which rearranges to the recursion.
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    out = [lam * 0 + 1]
    lk = 1
    for kk in range(1, k + 1):
        lk = lk * lam
        denom = 2 * (1 - lk)
        if float(denom) == 0.0:
            raise ValueError("lambda^k numerically equal to 1")
        s = 0
        for j in range(kk):
            s = s + math.comb(kk, j) * out[j]
        out.append(lk * s / denom)
    return out


def moment(lam: Scale, k: int):
    return moments(lam, k)[k]


def mean_closed_form(lam: Scale):
    return lam / (2 * (1 - lam))


def second_moment_closed_form(lam: Scale):
    return lam * lam / (2 * (1 - lam) ** 2 * (1 + lam))


def third_moment_candidate(lam: Scale):
    """A candidate closed form for M₃, λ³(λ + 2(1−λ²+λ³)) / (4(1−λ³)(1−λ²)(1−λ)).

    It disagrees with the recursion (e.g. 3/14 against 1/4 at λ = ½), so it is
    kept only for comparison.
    """
    return lam**3 * (lam + 2 * (1 - lam**2 + lam**3)) / (4 * (1 - lam**3) * (1 - lam**2) * (1 - lam))


def third_moment_closed_form(lam: Scale):
    """M₃ = λ³(2 − λ) / (4(1−λ)³(1+λ)), obtained by solving the recursion symbolically."""
    return lam**3 * (2 - lam) / (4 * (1 - lam) ** 3 * (1 + lam))


# ---------------------------------------------------------------------------
# Monte Carlo oracle


@dataclass(frozen=True)
class MonteCarloResult:
    samples: int
    depth: int
    mean: np.ndarray  # E[X^k], k = 1..K
    stderr: np.ndarray
    seed: int


def sample_encodings(lam: float, count: int, depth: int = 60, rng=None, chunk: int = 1_000_000):
    """Yield chunks of π_depth(ω) for fair random bits ω, via per-byte lookup tables."""
    rng = np.random.default_rng(rng)
    lam = float(lam)
    nbytes = (depth + 7) // 8
    tables = np.zeros((nbytes, 256))
    byte = np.arange(256)
    for j in range(nbytes):
        for bit in range(8):
            i = 8 * j + bit + 1  # exponent of λ for this digit
            if i <= depth:
                tables[j] += ((byte >> bit) & 1) * lam**i
    done = 0
    while done < count:
        m = min(chunk, count - done)
        raw = rng.integers(0, 256, size=(m, nbytes), dtype=np.uint8)
        x = np.zeros(m)
        for j in range(nbytes):
            x += tables[j][raw[:, j]]
        done += m
        yield x


def monte_carlo_moments(
    lam: float, kmax: int = 3, count: int = 10_000_000, depth: int = 60, seed: int = 20240611
) -> MonteCarloResult:
    s1 = np.zeros(kmax)
    s2 = np.zeros(kmax)
    for x in sample_encodings(lam, count, depth, rng=seed):
        xp = np.ones_like(x)
        for k in range(kmax):
            xp = xp * x
            s1[k] += xp.sum()
            s2[k] += (xp * xp).sum()
    mean = s1 / count
    var = s2 / count - mean**2
    return MonteCarloResult(count, depth, mean, np.sqrt(np.maximum(var, 0) / count), seed)


def monte_carlo_interval_mass(
    lam: float, left: float, right: float, count: int = 10_000_000, depth: int = 60, seed: int = 20240611
) -> tuple[float, float]:
    """(estimate, standard error) of μ_λ([left, right])."""
    hits = 0
    for x in sample_encodings(lam, count, depth, rng=seed):
        hits += int(np.count_nonzero((x >= left) & (x <= right)))
    p = hits / count
    return p, math.sqrt(p * (1 - p) / count)


# ---------------------------------------------------------------------------
# Fourier side


def char_fn(lam: Scale, t, terms: int = 60):
    """Truncated product e^{itM₁} ∏_{n≤terms} cos(tλⁿ/2) and its error bound.

    The bound |t|λ^{terms+1}/(2(1−λ)) follows from |cos u − 1| ≤ |u| applied to
    the omitted factors.  ``t`` may be a scalar or an array.
    """
    if terms < 1:
        raise ValueError("need at least one product term")
    lam = float(lam)
    t = np.asarray(t, dtype=float)
    m1 = lam / (2 * (1 - lam))
    prod = np.ones_like(t)
    p = lam
    for _ in range(terms):
        prod = prod * np.cos(t * p / 2)
        p *= lam
    val = np.exp(1j * t * m1) * prod
    bound = np.abs(t) * lam ** (terms + 1) / (2 * (1 - lam))
    if val.ndim == 0:
        return complex(val), float(bound)
    return val, bound


def atomic_char_fn(points: np.ndarray, weights: np.ndarray, t) -> np.ndarray:
    """∫ e^{itx} dm for an atomic measure."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(1j * np.outer(t, points)) @ weights


def wiener_atom_test(lam: Scale, T: float, terms: int = 60, limit: int = 2000) -> dict:
    """(1/2T) ∫_{−T}^{T} |μ̂_λ(t)|² dt with adaptive quadrature.

    By Wiener's lemma this tends to Σ (atom mass)² as T → ∞; values shrinking
    with T are consistent with no atoms but do not prove it.
    """
    if T <= 0:
        raise ValueError("T must be positive")

    def integrand(t):
        v, _ = char_fn(lam, t, terms)
        return abs(v) ** 2

    # |μ̂|² is even, so integrate over [0, T]
    val, err = integrate.quad(integrand, 0.0, T, limit=limit)
    _, tb = char_fn(lam, T, terms)
    if not math.isfinite(val) or err > 1e-6 * max(1.0, T):
        raise ArithmeticError(f"quadrature did not converge (error estimate {err:g})")
    return {"value": val / T, "quad_error": err / T, "truncation_bound": 2 * tb, "T": T}


def lebesgue_wiener_value(T: float) -> float:
    """Closed form of the Wiener average for λ = ½: 2(Si(T) − sin²(T/2)/(T/2))/T."""
    si, _ = special.sici(T)
    return 2 * (si - math.sin(T / 2) ** 2 / (T / 2)) / T


# ---------------------------------------------------------------------------
# symmetry


def symmetry_defect(ifs: IFS1D, n: int):
    """max_a |w(a) − w(s_n − a)| over atoms of Tⁿδ₀, s_n = λ + ⋯ + λⁿ."""
    from .cascade import node_set

    if n < 1:
        raise ValueError("n must be at least 1")
    ns = node_set(ifs, n)
    s = sum(ifs.powers(n), ifs.lam * 0)
    if ifs.exact:
        w = dict(zip(ns.values, ns.counts))
        d = max(abs(c - w.get(s - v, 0)) for v, c in w.items())
        return Fraction(d, 2**n)
    v = ns.values
    wts = np.asarray(ns.counts) / 2.0**n
    mirror = float(s) - v
    # mirrored value list is v reversed; match by position with a tolerance check
    idx = np.clip(np.searchsorted(v, mirror), 0, v.size - 1)
    idx2 = np.clip(idx - 1, 0, v.size - 1)
    pick = np.where(np.abs(v[idx2] - mirror) < np.abs(v[idx] - mirror), idx2, idx)
    matched = np.abs(v[pick] - mirror) <= 1e3 * ifs.eps
    partner = np.where(matched, wts[pick], 0.0)
    return float(np.max(np.abs(wts - partner)))
