"""Cuntz isometries and the dilation V on finite-level symbolic space.

A level-n cylinder function is a vector indexed by the Nⁿ words (first digit
most significant) with inner product N⁻ⁿ Σ ψ̄χ.  Sᵢ moves level n to level
n+1 and Sᵢ* moves it back; a single finite-dimensional space cannot carry
both Cuntz relations, so the levels are kept separate.

Factors √N are tracked as an integer exponent ``half_power`` (the represented
function is N^{half_power/2}·values), so integer-valued functions satisfy the
Cuntz identities with exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .core import BudgetExceeded, all_words

CUNTZ_BUDGET = 14


@dataclass(frozen=True)
class CylinderFunction:
    N: int
    level: int
    values: np.ndarray
    half_power: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("alphabet size must be at least 2")
        v = np.asarray(self.values)
        if v.shape != (self.N**self.level,):
            raise ValueError(f"expected {self.N ** self.level} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, N: int, level: int, c=1) -> CylinderFunction:
        return cls(N, level, np.full(N**level, c, dtype=np.int64 if isinstance(c, int) else float))

    @classmethod
    def indicator(cls, N: int, level: int, prefix: tuple[int, ...]) -> CylinderFunction:
        """Indicator of the cylinder C(prefix) as a level-n function."""
        k = len(prefix)
        if k > level:
            raise ValueError("prefix longer than level")
        start = 0
        for d in prefix:
            start = start * N + d
        block = N ** (level - k)
        v = np.zeros(N**level, dtype=np.int64)
        v[start * block : (start + 1) * block] = 1
        return cls(N, level, v)

    def dense(self) -> np.ndarray:
        """Values including the √N factors, as floats."""
        return self.values * float(self.N) ** (self.half_power / 2)

    def _aligned(self, other: CylinderFunction):
        if (self.N, self.level) != (other.N, other.level):
            raise ValueError("functions live on different levels")
        d = self.half_power - other.half_power
        if d % 2 == 0:
            s = self.N ** (abs(d) // 2)
            if d >= 0:
                return self.values * s, other.values, other.half_power
            return self.values, other.values * s, self.half_power
        return None

    def __add__(self, other: CylinderFunction) -> CylinderFunction:
        al = self._aligned(other)
        if al is None:
            return CylinderFunction(self.N, self.level, self.dense() + other.dense())
        a, b, hp = al
        return CylinderFunction(self.N, self.level, a + b, hp)

    def scale(self, c) -> CylinderFunction:
        return CylinderFunction(self.N, self.level, self.values * c, self.half_power)

    def equals(self, other: CylinderFunction, tol: float = 0.0) -> bool:
        al = self._aligned(other)
        if al is not None and tol == 0.0:
            a, b, _ = al
            return bool(np.array_equal(a, b))
        return bool(np.max(np.abs(self.dense() - other.dense()), initial=0.0) <= tol)

    def is_zero(self) -> bool:
        return not np.any(self.values)


def inner_parts(psi: CylinderFunction, chi: CylinderFunction) -> tuple[Fraction, int]:
    """⟨ψ, χ⟩ = r · N^{k/2} with r rational (for integer or rational values)."""
    if (psi.N, psi.level) != (chi.N, chi.level):
        raise ValueError("functions live on different levels")
    s = np.sum(np.conj(psi.values) * chi.values)
    r = Fraction(int(s)) if np.issubdtype(np.asarray(s).dtype, np.integer) else Fraction(s)
    return r / psi.N**psi.level, psi.half_power + chi.half_power


def inner(psi: CylinderFunction, chi: CylinderFunction) -> float:
    return float(np.sum(np.conj(psi.dense()) * chi.dense())) / psi.N**psi.level


def norm(psi: CylinderFunction) -> float:
    return float(np.sqrt(inner(psi, psi)))


def shift_adjoint_apply(i: int, psi: CylinderFunction) -> CylinderFunction:
    """(Sᵢ*ψ)(w) = N^{-1/2} ψ(i·w); level n → n−1."""
    if psi.level < 1:
        raise ValueError("S_i* needs level at least 1")
    if not 0 <= i < psi.N:
        raise ValueError("digit outside alphabet")
    block = psi.N ** (psi.level - 1)
    return CylinderFunction(psi.N, psi.level - 1, psi.values[i * block : (i + 1) * block].copy(), psi.half_power - 1)


def shift_isometry_apply(i: int, psi: CylinderFunction) -> CylinderFunction:
    """(Sᵢψ)(w) = N^{1/2} ψ(tail w) when w starts with i, else 0; level n → n+1."""
    if not 0 <= i < psi.N:
        raise ValueError("digit outside alphabet")
    block = psi.N**psi.level
    v = np.zeros(psi.N * block, dtype=psi.values.dtype)
    v[i * block : (i + 1) * block] = psi.values
    return CylinderFunction(psi.N, psi.level + 1, v, psi.half_power + 1)


def cuntz_identities(N: int, level: int, psi: CylinderFunction | None = None, rng=None) -> dict:
    """Exact checks of Sᵢ*Sⱼ = δᵢⱼI (level n) and Σ SᵢSᵢ* = I (level n+1) on integer vectors."""
    rng = np.random.default_rng(rng)
    if psi is None:
        psi = CylinderFunction(N, level, rng.integers(-9, 10, N**level))
    chi = CylinderFunction(N, level + 1, rng.integers(-9, 10, N ** (level + 1)))
    orth = True
    for i in range(N):
        for j in range(N):
            r = shift_adjoint_apply(i, shift_isometry_apply(j, psi))
            orth &= r.equals(psi) if i == j else r.is_zero()
    total = None
    for i in range(N):
        t = shift_isometry_apply(i, shift_adjoint_apply(i, chi))
        total = t if total is None else total + t
    return {"orthogonality": bool(orth), "completeness": total.equals(chi)}


# ---------------------------------------------------------------------------
# dilation V f = f∘π


def ifs_vertices(ifs) -> np.ndarray:
    """Translation vectors uᵢ with τᵢ(x) = λ(x + uᵢ): scalars in 1D, oblique coordinates in 2D."""
    u = getattr(ifs, "vertices_oblique", None)
    if u is not None:
        return np.asarray(u, dtype=float)
    return np.array([0.0, 1.0])


def encode_words(ifs, n: int) -> np.ndarray:
    """π_n(w) = Σₖ λᵏ u_{wₖ} for all Nⁿ words in lexicographic order."""
    u = ifs_vertices(ifs)
    N = u.shape[0]
    lam = float(ifs.lam)
    if n == 0:
        return np.zeros((1,) + u.shape[1:])
    W = all_words(n, N)
    pw = lam ** np.arange(1, n + 1)
    # Σ_k λ^k u[w_k]: gather per position then contract
    return np.tensordot(pw, u[W.T], axes=(0, 0))


def dilation_embed(ifs, f: Callable, n: int) -> CylinderFunction:
    """(Vf)(w) = f(π_n(w))."""
    u = ifs_vertices(ifs)
    N = u.shape[0]
    if n > CUNTZ_BUDGET:
        raise BudgetExceeded(f"level {n} exceeds {CUNTZ_BUDGET}")
    pts = encode_words(ifs, n)
    return CylinderFunction(N, n, np.asarray(f(pts), dtype=float))


def dilation_isometry(ifs, f: Callable, n: int) -> tuple[float, float]:
    """(‖Vf‖²_P, ‖f‖²_{μ_n}); the second is computed on the consolidated measure μ_n."""
    psi = dilation_embed(ifs, f, n)
    lhs = inner(psi, psi)
    pts = encode_words(ifs, n)
    flat = pts.reshape(pts.shape[0], -1)
    uniq, inv = np.unique(np.round(flat, 12), axis=0, return_inverse=True)
    w = np.bincount(inv.ravel()) / flat.shape[0]
    rep = np.zeros_like(uniq)
    rep[inv.ravel()] = flat
    rep = rep.reshape((uniq.shape[0],) + pts.shape[1:])
    rhs = float(np.sum(w * np.abs(np.asarray(f(rep), dtype=float)) ** 2))
    return lhs, rhs


def dilation_isometry_exact(ifs, f: Callable, n: int) -> tuple:
    """Exact (‖Vf‖²_P, ‖f‖²_{μ_n}) for a 1D IFS with exact λ.

    The left side sums f(π_n(w))² over all 2ⁿ words one by one; the right side
    uses the consolidated node set with its multiplicities.
    """
    from .cascade import node_set

    if not ifs.exact:
        raise ValueError("exact dilation check needs an exact lambda")
    if n > CUNTZ_BUDGET:
        raise BudgetExceeded(f"level {n} exceeds {CUNTZ_BUDGET}")
    pw = ifs.powers(n)
    zero = ifs.lam * 0
    # π_n over all words, built digit by digit (first digit most significant)
    pts = [zero]
    for p in pw:
        pts = [x + d * p for x in pts for d in (0, 1)]
    lhs = sum((f(x) ** 2 for x in pts), zero) / 2**n
    m = node_set(ifs, n).measure()
    rhs = sum((w * f(x) ** 2 for x, w in zip(m.points, m.weights)), zero)
    return lhs, rhs


def composition_apply(ifs, i: int, f: Callable) -> Callable:
    """Fᵢf = N^{-1/2} f∘τᵢ (the √N factor is carried separately by callers)."""
    u = ifs_vertices(ifs)
    lam = float(ifs.lam)
    return lambda x: f(lam * (np.asarray(x, dtype=float) + u[i]))


def intertwining_check(ifs, n: int, samples: list[Callable] | None = None) -> float:
    """max over samples and i of ‖V Fᵢ f − Sᵢ* V f‖ at level n."""
    u = ifs_vertices(ifs)
    N = u.shape[0]
    if samples is None:
        samples = default_samples(u.ndim)
    worst = 0.0
    for f in samples:
        Vf_next = dilation_embed(ifs, f, n + 1)
        for i in range(N):
            left = dilation_embed(ifs, composition_apply(ifs, i, f), n)
            left = CylinderFunction(N, n, left.values, -1)  # the N^{-1/2} of Fᵢ
            right = shift_adjoint_apply(i, Vf_next)
            worst = max(worst, norm(CylinderFunction(N, n, left.dense() - right.dense())))
    return worst


def default_samples(ndim: int) -> list[Callable]:
    """Polynomial test functions on the line or plane."""
    if ndim == 1:
        return [
            lambda x: np.ones_like(x),
            lambda x: x,
            lambda x: x**2 - 3 * x,
            lambda x: x**3 - x + 0.5,
        ]
    return [
        lambda p: np.ones(p.shape[0]),
        lambda p: p[:, 0] + 2 * p[:, 1],
        lambda p: p[:, 0] ** 2 - p[:, 0] * p[:, 1] + 0.25,
        lambda p: p[:, 1] ** 3 - p[:, 0],
    ]


def minimality_density_check(ifs, n: int, family: list[Callable] | None = None, tol: float = 1e-12) -> float:
    """Largest distance from a level-n cylinder indicator to span{S_{i₁}⋯S_{iₖ} V e}.

    The span runs over k ≤ n, all digit strings, and e in ``family`` (default:
    the constant 1).  Orthogonalisation is modified Gram–Schmidt with one
    reorthogonalisation pass in the level-n inner product.
    """
    u = ifs_vertices(ifs)
    N = u.shape[0]
    if n > CUNTZ_BUDGET // 2 + 2:
        raise BudgetExceeded(f"level {n} too large for the span computation")
    if family is None:
        family = [lambda x: np.ones(x.shape[0])]
    basis: list[np.ndarray] = []

    def add(v: np.ndarray) -> None:
        w = v.astype(float).copy()
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        nw = np.linalg.norm(w)
        if nw > tol * max(1.0, np.linalg.norm(v)):
            basis.append(w / nw)

    for k in range(n + 1):
        for e in family:
            base = dilation_embed(ifs, e, n - k)
            for word in all_words(k, N) if k else [()]:
                psi = base
                for d in reversed(tuple(word)):
                    psi = shift_isometry_apply(int(d), psi)
                add(psi.dense())
    worst = 0.0
    dim = N**n
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        r = e.copy()
        for _ in range(2):
            for q in basis:
                r -= (q @ r) * q
        worst = max(worst, float(np.linalg.norm(r)))
    return worst
