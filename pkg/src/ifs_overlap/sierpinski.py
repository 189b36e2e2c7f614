"""The three-map planar family τᵢ(x) = λ(x + uᵢ) with u₀, u₁, u₂ the unit triangle.

Geometry is done in oblique coordinates p = α·u₁ + β·u₂ with u₁ = (1, 0) and
u₂ = (½, √3/2), so every vertex of every triangle τ_w(T) has coordinates in
Q(λ) and no √3 appears.  An upright equilateral triangle is
{α ≥ c₁, β ≥ c₂, α + β ≤ c₃} with side c₃ − c₁ − c₂; two of them intersect
in (max c₁, max c₂, min c₃).  A downward triangle is
{α ≤ d₁, β ≤ d₂, α + β ≥ d₃} with side d₁ + d₂ − d₃.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import BudgetExceeded, MeasureBound, Scale, all_words, is_exact_scale, parse_lambda
from .overlap import overlap_lower_bound
from .quadratic import QuadNumber, golden_field

SQRT3_2 = math.sqrt(3) / 2
SIERPINSKI_BUDGET = 13
ENCLOSURE_MAX_DEPTH = 40
ENCLOSURE_MAX_FRONTIER = 3_000_000


def _zero(x):
    return x * 0


def _sign(x, eps: float) -> int:
    """Sign with an ε-band for floats, exact for Q(λ) and rationals."""
    if isinstance(x, float):
        if x > eps:
            return 1
        if x < -eps:
            return -1
        return 0
    return (x > 0) - (x < 0)


def _max(a, b):
    return b if a < b else a


def _min(a, b):
    return a if a < b else b


# ---------------------------------------------------------------------------
# triangles


@dataclass(frozen=True)
class UprightTriangle:
    """{α ≥ c1, β ≥ c2, α + β ≤ c3} in oblique coordinates."""

    c1: object
    c2: object
    c3: object

    @property
    def side(self):
        return self.c3 - self.c1 - self.c2

    @property
    def orientation(self) -> str:
        return "up"

    def vertices(self) -> tuple:
        """Oblique coordinates of the lower-left, lower-right and top vertices."""
        return (self.c1, self.c2), (self.c3 - self.c2, self.c2), (self.c1, self.c3 - self.c1)

    def euclidean_vertices(self) -> np.ndarray:
        return oblique_to_euclid(np.array([[float(a), float(b)] for a, b in self.vertices()]))

    def image(self, lam, u: tuple) -> UprightTriangle:
        """Image under x ↦ λ(x + u)."""
        return UprightTriangle(lam * (self.c1 + u[0]), lam * (self.c2 + u[1]), lam * (self.c3 + u[0] + u[1]))

    def intersect(self, other: UprightTriangle) -> UprightTriangle:
        """Support-value intersection; may have side ≤ 0 (contact point or empty)."""
        if not isinstance(other, UprightTriangle):
            raise ValueError("intersection needs two upright triangles")
        return UprightTriangle(_max(self.c1, other.c1), _max(self.c2, other.c2), _min(self.c3, other.c3))

    def contains(self, other: UprightTriangle) -> bool:
        return self.c1 <= other.c1 and self.c2 <= other.c2 and other.c3 <= self.c3

    def as_float(self) -> tuple[float, float, float]:
        return float(self.c1), float(self.c2), float(self.c3)


@dataclass(frozen=True)
class DownTriangle:
    """{α ≤ d1, β ≤ d2, α + β ≥ d3}; used only for gaps."""

    d1: object
    d2: object
    d3: object

    @property
    def side(self):
        return self.d1 + self.d2 - self.d3

    @property
    def orientation(self) -> str:
        return "down"

    def vertices(self) -> tuple:
        return (self.d3 - self.d2, self.d2), (self.d1, self.d3 - self.d1), (self.d1, self.d2)

    def euclidean_vertices(self) -> np.ndarray:
        return oblique_to_euclid(np.array([[float(a), float(b)] for a, b in self.vertices()]))

    def image(self, lam, u: tuple) -> DownTriangle:
        return DownTriangle(lam * (self.d1 + u[0]), lam * (self.d2 + u[1]), lam * (self.d3 + u[0] + u[1]))


def oblique_to_euclid(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.stack([p[..., 0] + 0.5 * p[..., 1], SQRT3_2 * p[..., 1]], axis=-1)


def euclid_to_oblique(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    beta = p[..., 1] / SQRT3_2
    return np.stack([p[..., 0] - 0.5 * beta, beta], axis=-1)


def intersect_translates(a, b, eps: float = 1e-12):
    """Intersection of two upright triangles: a triangle, a contact point, or None.

    Returns ``(triangle, kind)`` with kind in {"triangle", "contact", "empty"}.
    """
    if not (isinstance(a, UprightTriangle) and isinstance(b, UprightTriangle)):
        raise ValueError("mixed orientations are not supported")
    t = a.intersect(b)
    s = _sign(t.side, eps)
    if s > 0:
        return t, "triangle"
    if s == 0:
        return t, "contact"
    return None, "empty"


@dataclass(frozen=True)
class TriangleUnion:
    triangles: tuple
    level: int = 0
    contacts: tuple = ()
    disjoint: bool | None = None

    def __len__(self) -> int:
        return len(self.triangles)

    def __iter__(self):
        return iter(self.triangles)

    @classmethod
    def build(cls, triangles: Iterable, level: int = 0, contacts: Iterable = (), *, eps: float = 1e-12, verify: bool = True):
        tris = tuple(triangles)
        disjoint = pairwise_interior_disjoint(tris, eps) if verify else None
        return cls(tris, level, tuple(contacts), disjoint)


def pairwise_interior_disjoint(tris: Sequence[UprightTriangle], eps: float = 1e-12) -> bool:
    if len(tris) < 2:
        return True
    c = np.array([t.as_float() for t in tris])
    lo1 = np.maximum.outer(c[:, 0], c[:, 0])
    lo2 = np.maximum.outer(c[:, 1], c[:, 1])
    hi = np.minimum.outer(c[:, 2], c[:, 2])
    side = hi - lo1 - lo2
    np.fill_diagonal(side, -np.inf)
    bad = np.argwhere(side > 1e-9)
    if bad.size:
        return False
    close = np.argwhere(np.abs(side) <= 1e-9)
    for i, j in close:
        if i < j and _sign(tris[i].intersect(tris[j]).side, eps) > 0:
            return False
    return True


# ---------------------------------------------------------------------------
# the IFS


@dataclass(frozen=True)
class IFS2D:
    lam: Scale
    eps: float = 1e-12
    budget: int = SIERPINSKI_BUDGET

    def __post_init__(self):
        if not 0 < float(self.lam) < 1:
            raise ValueError("lambda must lie in (0,1)")

    @classmethod
    def from_spec(cls, spec, exact: bool | None = None, **kw) -> IFS2D:
        return cls(parse_lambda(spec, exact), **kw)

    @property
    def exact(self) -> bool:
        return is_exact_scale(self.lam)

    @property
    def one(self):
        return self.lam.field(1) if self.exact else 1.0

    @property
    def zero(self):
        return self.lam.field(0) if self.exact else 0.0

    @property
    def b(self):
        return self.lam / (1 - self.lam)

    @property
    def u(self) -> tuple:
        """u₀, u₁, u₂ in oblique coordinates."""
        z, o = self.zero, self.one
        return ((z, z), (o, z), (z, o))

    @property
    def vertices_oblique(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    @property
    def vertices_euclid(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, SQRT3_2]])

    @property
    def T(self) -> UprightTriangle:
        """Envelope triangle with vertices (λ/(1−λ))uᵢ."""
        return UprightTriangle(self.zero, self.zero, self.b)

    def tau(self, i: int, tri):
        return tri.image(self.lam, self.u[i])

    def tau_word(self, word: Sequence[int], tri):
        """τ_{w₁}∘⋯∘τ_{wₙ}(tri)."""
        for d in reversed(tuple(word)):
            tri = self.tau(int(d), tri)
        return tri

    def check_budget(self, n: int) -> None:
        if n < 0:
            raise ValueError("depth must be non-negative")
        if n > self.budget:
            raise BudgetExceeded(f"depth {n} exceeds budget {self.budget}")

    def level_triangles(self, n: int) -> list[UprightTriangle]:
        """τ_w(T) for all ternary words of length n, lexicographic."""
        self.check_budget(n)
        out = [self.T]
        for _ in range(n):
            # prepend a digit: τ_i(τ_w T); keep lexicographic order in the new first digit
            out = [self.tau(i, t) for i in range(3) for t in out]
        return out


PAIRS = ((0, 1), (0, 2), (1, 2))


def first_overlaps(ifs: IFS2D) -> list[UprightTriangle]:
    """[τ₀T∩τ₁T, τ₀T∩τ₂T, τ₁T∩τ₂T] (possibly degenerate)."""
    T = ifs.T
    imgs = [ifs.tau(i, T) for i in range(3)]
    return [imgs[i].intersect(imgs[j]) for i, j in PAIRS]


def ov_level(ifs: IFS2D, n: int) -> TriangleUnion:
    """ov(τⁿT) = {τ_ξ(OV(T)) : |ξ| = n − 1}: 3ⁿ triangles when λ > ½."""
    if n < 1:
        raise ValueError("overlap levels start at n = 1")
    ifs.check_budget(n)
    base = first_overlaps(ifs)
    s = _sign(base[0].side, ifs.eps)
    if s < 0:
        return TriangleUnion((), n, (), True)
    tris = list(base)
    for _ in range(n - 1):
        tris = [ifs.tau(i, t) for i in range(3) for t in tris]
    if s == 0:
        return TriangleUnion((), n, tuple(tris), True)
    return TriangleUnion.build(tris, n, eps=ifs.eps, verify=len(tris) <= 3**7)


def ov_apply(ifs: IFS2D, s: TriangleUnion | Sequence[UprightTriangle]) -> TriangleUnion:
    """OV(S) = (τ₀S∩τ₁S) ∪ (τ₀S∩τ₂S) ∪ (τ₁S∩τ₂S), computed triangle by triangle."""
    tris = list(s.triangles if isinstance(s, TriangleUnion) else s)
    imgs = [[ifs.tau(i, t) for t in tris] for i in range(3)]
    found, contacts, seen = [], [], set()
    for i, j in PAIRS:
        for a in imgs[i]:
            for b in imgs[j]:
                t, kind = intersect_translates(a, b, ifs.eps)
                if kind == "empty":
                    continue
                key = tuple(round(v, 12) for v in t.as_float())
                if key in seen:
                    continue
                seen.add(key)
                (found if kind == "triangle" else contacts).append(t)
    level = s.level + 1 if isinstance(s, TriangleUnion) else 0
    return TriangleUnion.build(found, level, contacts, eps=ifs.eps)


def same_triangle_sets(a: Iterable[UprightTriangle], b: Iterable[UprightTriangle], tol: float = 1e-12) -> bool:
    ka = sorted(tuple(round(v / tol) for v in t.as_float()) for t in a)
    kb = sorted(tuple(round(v / tol) for v in t.as_float()) for t in b)
    return ka == kb


def rotate120(tri: UprightTriangle, b) -> UprightTriangle:
    """Rotation by 120° about the centroid of T: (α, β) ↦ (b − α − β, α)."""
    pts = [(b - a - c, a) for a, c in tri.vertices()]
    c1 = pts[0][0]
    c2 = pts[0][1]
    c3 = pts[0][0] + pts[0][1]
    for a, c in pts[1:]:
        c1 = _min(c1, a)
        c2 = _min(c2, c)
        c3 = _max(c3, a + c)
    return UprightTriangle(c1, c2, c3)


# ---------------------------------------------------------------------------
# regimes


REGIMES = {
    "gasket": "lambda <= 1/2: gasket-type, outside the overlap taxonomy",
    "i": "disjoint-ov: successive overlap levels are disjoint",
    "ii": "vertex-touching: successive overlap levels meet in vertices",
    "iii": "residual: successive overlap levels meet in triangles; central gaps remain",
    "iv": "gap-closing: central gaps close; overlap with multiplicity",
    "v": "no-gaps: no central gaps; overlap with multiplicity",
}

REGIME_NAMES = {
    "gasket": "gasket",
    "i": "disjoint-ov",
    "ii": "vertex-touching",
    "iii": "residual",
    "iv": "gap-closing",
    "v": "no-gaps",
}


@dataclass(frozen=True)
class RegimeTag:
    code: str
    ambiguous: bool = False
    note: str = ""

    @property
    def name(self) -> str:
        return REGIME_NAMES[self.code]

    @property
    def description(self) -> str:
        return REGIMES[self.code]


def classify_regime(lam: Scale, eps: float = 1e-12) -> RegimeTag:
    """Regime by comparing λ with ½, (√5−1)/2 and ⅔ (exactly for Q(λ) values)."""
    if is_exact_scale(lam):
        half, two3 = Fraction(1, 2), Fraction(2, 3)
        if lam <= half:
            return RegimeTag("gasket")
        g = lam * lam + lam - 1  # sign of λ − golden for λ > 0
        sg = _sign(g, 0.0)
        if sg < 0:
            return RegimeTag("i")
        if sg == 0:
            return RegimeTag("ii")
        if lam < two3:
            return RegimeTag("iii")
        if lam == two3:
            return RegimeTag("iv")
        return RegimeTag("v")
    x = float(lam)
    golden = (math.sqrt(5) - 1) / 2
    if x <= 0.5:
        return RegimeTag("gasket", abs(x - 0.5) <= eps)
    if abs(x - golden) <= eps:
        return RegimeTag("ii", True, "float lambda within eps of the golden ratio")
    if abs(x - 2 / 3) <= eps:
        return RegimeTag("iv", True, "float lambda within eps of 2/3")
    if x < golden:
        return RegimeTag("i")
    if x < 2 / 3:
        return RegimeTag("iii")
    return RegimeTag("v")


@dataclass
class ChainReport:
    kind: str  # "empty" | "vertex-contacts" | "triangles"
    level: int
    triangles: list = field(default_factory=list)
    contacts: list = field(default_factory=list)
    upper_sharing: list = field(default_factory=list)  # per ov(τⁿ) triangle: #ov(τⁿ⁺¹) touched
    lower_sharing: list = field(default_factory=list)  # per ov(τⁿ⁺¹) triangle: #ov(τⁿ) touched


def chain_intersection(ifs: IFS2D, n: int) -> ChainReport:
    """ov(τⁿT) ∩ ov(τⁿ⁺¹T), triangle by triangle."""
    ifs.check_budget(n + 1)
    A = ov_level(ifs, n)
    B = ov_level(ifs, n + 1)
    if not A.triangles:
        return ChainReport("empty", n)
    tris, contacts = [], []
    up = [0] * len(A)
    down = [0] * len(B)
    for ia, a in enumerate(A.triangles):
        for ib, b in enumerate(B.triangles):
            t, kind = intersect_translates(a, b, ifs.eps)
            if kind == "triangle":
                tris.append(t)
            elif kind == "contact":
                contacts.append(t)
                up[ia] += 1
                down[ib] += 1
    kind = "triangles" if tris else ("vertex-contacts" if contacts else "empty")
    return ChainReport(kind, n, tris, contacts, up, down)


@dataclass(frozen=True)
class GapRegion:
    triangle: DownTriangle | None
    side: object
    inside_envelope: bool


def gap_region(ifs: IFS2D) -> GapRegion:
    """T ∖ ⋃τᵢT bounded by the three inner edges: {α ≤ λ, β ≤ λ, α+β ≥ λb}.

    Side λ(2 − 3λ)/(1 − λ): ½ at λ = ½, 0 at λ = ⅔, empty beyond.  For λ < ½
    the hole is a hexagon and the inner-edge triangle pokes out of T, which
    ``inside_envelope`` reports.
    """
    lam = ifs.lam
    tri = DownTriangle(lam, lam, lam * ifs.b)
    side = tri.side
    s = _sign(side, ifs.eps)
    half = Fraction(1, 2) if ifs.exact else 0.5
    inside = not (lam < half)
    if s <= 0:
        return GapRegion(None, _zero(side) if s == 0 else side, inside)
    return GapRegion(tri, side, inside)


def gap_side(lam: Scale):
    return lam * (2 - 3 * lam) / (1 - lam)


def geometric_regime(ifs: IFS2D, n: int = 1) -> RegimeTag:
    """Regime read off the geometry alone: overlap size, chain type, gap size."""
    base = first_overlaps(ifs)[0]
    if _sign(base.side, ifs.eps) <= 0:
        return RegimeTag("gasket")
    ch = chain_intersection(ifs, n)
    if ch.kind == "empty":
        return RegimeTag("i")
    if ch.kind == "vertex-contacts":
        return RegimeTag("ii")
    g = gap_region(ifs)
    s = _sign(g.side, ifs.eps)
    if s > 0:
        return RegimeTag("iii")
    if s == 0:
        return RegimeTag("iv")
    return RegimeTag("v")


def triple_overlap_check(ifs: IFS2D) -> bool:
    """True when τ₀T∩τ₁T∩τ₂T has empty interior (side ≤ 0)."""
    T = ifs.T
    a, b, c = (ifs.tau(i, T) for i in range(3))
    return _sign(a.intersect(b).intersect(c).side, ifs.eps) <= 0


def hausdorff_dim(lam: Scale) -> tuple[float, bool]:
    """(−log 3 / log λ, in_range) with in_range meaning ½ < λ < ⅔."""
    x = float(lam)
    if not 0 < x < 1:
        raise ValueError("lambda must lie in (0,1)")
    return -math.log(3) / math.log(x), 0.5 < x < 2 / 3


@dataclass(frozen=True)
class LowerBound2D:
    value: Fraction
    m: int | None
    verified: bool
    note: str = ""


def overlap2d_lower_bound(lam: Scale) -> LowerBound2D:
    """Lower bound for μ_λ(OV₀₁).

    Below the golden ratio: 1/(3(3ᵐ − 1)) with m from the 1D partial sums.  At
    and above it the value 1/24 is returned as a bound; it is not the exact
    measure (see the enclosures), and above golden it rests on an unproved
    monotonicity claim.
    """
    half = Fraction(1, 2) if is_exact_scale(lam) else 0.5
    if not (half < lam < 1):
        raise ValueError("lambda must lie in (1/2, 1)")
    _, m = overlap_lower_bound(lam)
    if m >= 3:
        return LowerBound2D(Fraction(1, 3 * (3**m - 1)), m, True)
    if is_exact_scale(lam):
        at_golden = lam * lam + lam == 1
    else:
        at_golden = abs(float(lam) - (math.sqrt(5) - 1) / 2) <= 1e-12
    if at_golden:
        return LowerBound2D(Fraction(1, 24), 2, True, "valid lower bound; the exact measure is larger")
    return LowerBound2D(Fraction(1, 24), 2, False, "relies on monotonicity in lambda, not verified")


# ---------------------------------------------------------------------------
# measure enclosures


def _classify_tri(a1, a2, a3, region: Sequence[tuple], delta: float):
    """Vectorised inside/outside masks of reachable triangles against a union."""
    inside = np.zeros(a1.shape, dtype=bool)
    touches = np.zeros(a1.shape, dtype=bool)
    for c1, c2, c3 in region:
        inside |= (a1 >= c1 + delta) & (a2 >= c2 + delta) & (a3 <= c3 - delta)
        side = np.minimum(a3, c3) - np.maximum(a1, c1) - np.maximum(a2, c2)
        touches |= side >= -delta
    return inside, ~touches


def _classify_disk(px, py, r, region: Sequence[tuple], delta: float):
    """Disk of radius r around oblique point (px, py): inside / certainly outside."""
    inside = np.zeros(px.shape, dtype=bool)
    maybe = np.zeros(px.shape, dtype=bool)
    for c1, c2, c3 in region:
        d1 = (px - c1) * SQRT3_2
        d2 = (py - c2) * SQRT3_2
        d3 = (c3 - px - py) * SQRT3_2
        inside |= (d1 >= r + delta) & (d2 >= r + delta) & (d3 >= r + delta)
        out = (d1 < -r - delta) | (d2 < -r - delta) | (d3 < -r - delta)
        maybe |= ~out
    return inside, ~maybe


def measure2d_enclosure(
    ifs: IFS2D,
    region: UprightTriangle | TriangleUnion | Sequence[UprightTriangle],
    n: int,
    *,
    reach: str = "triangle",
    max_frontier: int = ENCLOSURE_MAX_FRONTIER,
) -> MeasureBound:
    """Enclose μ_λ(region) by ternary cylinder counting to depth n.

    Each prefix w of length k is classified by a set known to contain
    π(cylinder(w)): the disk of radius λᵏ⁺¹/(1−λ) around π_k(w)
    (``reach="disk"``) or the triangle τ_w(T) (``reach="triangle"``).
    Prefixes with identical float anchors are merged.  Float decisions use a
    safety margin that sends borderline prefixes to "straddling".
    """
    if n < 0:
        raise ValueError("depth must be non-negative")
    if n > ENCLOSURE_MAX_DEPTH:
        raise BudgetExceeded(f"depth {n} exceeds {ENCLOSURE_MAX_DEPTH}")
    if reach not in ("disk", "triangle"):
        raise ValueError("reach must be 'disk' or 'triangle'")
    if isinstance(region, UprightTriangle):
        tris = [region]
    else:
        tris = list(region.triangles if isinstance(region, TriangleUnion) else region)
    reg = [t.as_float() for t in tris]
    lam = float(ifs.lam)
    b = lam / (1 - lam)
    delta = 1e-11
    pts = np.zeros((1, 2))
    counts = np.array([1], dtype=np.int64)
    u = ifs.vertices_oblique
    inside_mass = Fraction(0)
    p = lam
    for k in range(n + 1):
        size = lam**k * b
        if reach == "triangle":
            ins, out = _classify_tri(pts[:, 0], pts[:, 1], pts[:, 0] + pts[:, 1] + size, reg, delta)
        else:
            ins, out = _classify_disk(pts[:, 0], pts[:, 1], size, reg, delta)
        if ins.any():
            inside_mass += Fraction(int(counts[ins].sum()), 3**k)
        keep = ~(ins | out)
        pts, counts = pts[keep], counts[keep]
        if k == n or counts.size == 0:
            break
        nxt = np.concatenate([pts + p * u[i] for i in range(3)])
        c = np.concatenate([counts] * 3)
        uniq, inv = np.unique(nxt, axis=0, return_inverse=True)
        pts, counts = uniq, np.bincount(inv.ravel(), weights=c).astype(np.int64)
        if counts.size > max_frontier:
            raise BudgetExceeded(f"frontier of {counts.size} prefixes at level {k + 1}")
        p *= lam
    straddle = Fraction(int(counts.sum()), 3**n) if counts.size else Fraction(0)
    return MeasureBound(inside_mass, inside_mass + straddle, n, {"frontier": int(counts.size), "reach": reach})


def tau1_region(ifs: IFS2D) -> UprightTriangle:
    return ifs.tau(1, ifs.T)


def ov01_region(ifs: IFS2D) -> UprightTriangle:
    return first_overlaps(ifs)[0]


def golden_2d_report(n: int = 12, reach: str = "triangle") -> dict:
    """Enclosures of μ(τ₁T) and μ(τ₀T∩τ₁T) at the golden ratio, with the identity 3a − 3o."""
    ifs = IFS2D(golden_field().root)
    a = measure2d_enclosure(ifs, tau1_region(ifs), n, reach=reach)
    o = measure2d_enclosure(ifs, ov01_region(ifs), n, reach=reach)
    ident = a.scale_shift(3) - o.scale_shift(3)
    return {"tau1": a, "ov01": o, "identity": ident}


def monte_carlo_2d(lam: float, region: Sequence[UprightTriangle], count: int = 2_000_000, depth: int = 60, seed: int = 5):
    """(estimate, stderr) of μ_λ(region) from random ternary words (an independent check)."""
    rng = np.random.default_rng(seed)
    lam = float(lam)
    reg = [t.as_float() for t in region]
    hits = 0
    done = 0
    pw = lam ** np.arange(1, depth + 1)
    while done < count:
        m = min(200_000, count - done)
        d = rng.integers(0, 3, size=(m, depth))
        a = (d == 1).astype(float) @ pw
        bb = (d == 2).astype(float) @ pw
        hit = np.zeros(m, dtype=bool)
        for c1, c2, c3 in reg:
            hit |= (a >= c1) & (bb >= c2) & (a + bb <= c3)
        hits += int(hit.sum())
        done += m
    p = hits / count
    return p, math.sqrt(p * (1 - p) / count)


# ---------------------------------------------------------------------------
# rendering


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _svg_polygon(tri, to_px) -> str:
    pts = to_px(tri.euclidean_vertices())
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
    return f'<polygon points="{coords}"/>'


def gap_triangles(ifs: IFS2D, n: int) -> list[DownTriangle]:
    """τ_ξ(G₁) for |ξ| < n; empty when the gaps have closed."""
    g = gap_region(ifs)
    if g.triangle is None or n < 1:
        return []
    out = [g.triangle]
    level = [g.triangle]
    for _ in range(n - 1):
        level = [ifs.tau(i, t) for i in range(3) for t in level]
        out.extend(level)
    return out


DEFAULT_COLORS = {"attractor": "#d0d0d0", "overlaps": "#404040", "gaps": "#ffffff", "background": "#ffffff"}


def render_svg(ifs: IFS2D, n: int, layers: Iterable[str] = ("attractor", "overlaps", "gaps"), size: int = 512, colors: dict | None = None) -> str:
    """SVG 1.1 document: level-n triangles, ov(τⁿT) triangles, gap triangles, one group each."""
    ifs.check_budget(n)
    colors = {**DEFAULT_COLORS, **(colors or {})}
    layers = tuple(layers)
    bad = set(layers) - {"attractor", "overlaps", "gaps"}
    if bad:
        raise ValueError(f"unknown layers {sorted(bad)}")
    b = float(ifs.b)
    margin = 8.0
    scale = (size - 2 * margin) / b
    height = int(round(SQRT3_2 * b * scale + 2 * margin))

    def to_px(p):
        return np.stack([margin + p[:, 0] * scale, height - margin - p[:, 1] * scale], axis=1)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{height}" viewBox="0 0 {size} {height}">',
        f'<rect width="{size}" height="{height}" fill="{colors["background"]}"/>',
    ]
    if "attractor" in layers:
        out.append(f'<g id="attractor" fill="{colors["attractor"]}" stroke="none">')
        out.extend(_svg_polygon(t, to_px) for t in ifs.level_triangles(n))
        out.append("</g>")
    if "overlaps" in layers and n >= 1:
        ov = ov_level(ifs, n)
        if ov.triangles:
            out.append(f'<g id="overlaps" fill="{colors["overlaps"]}" stroke="none">')
            out.extend(_svg_polygon(t, to_px) for t in ov.triangles)
            out.append("</g>")
    if "gaps" in layers:
        gaps = gap_triangles(ifs, n)
        if gaps:
            out.append(f'<g id="gaps" fill="{colors["gaps"]}" stroke="none">')
            out.extend(_svg_polygon(t, to_px) for t in gaps)
            out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_pgm(ifs: IFS2D, n: int, layers: Iterable[str] = ("attractor", "overlaps", "gaps"), size: int = 512) -> bytes:
    """Binary PGM (P5): attractor 192, overlaps 64, gaps and background 255."""
    ifs.check_budget(n)
    layers = tuple(layers)
    b = float(ifs.b)
    height = int(round(SQRT3_2 * size))
    xs = (np.arange(size) + 0.5) / size * b
    ys = (height - np.arange(height) - 0.5) / size * b
    X, Y = np.meshgrid(xs, ys)
    ob = euclid_to_oblique(np.stack([X, Y], axis=-1))
    A, B = ob[..., 0], ob[..., 1]
    img = np.full((height, size), 255, dtype=np.uint8)

    def paint(tri, value):
        if isinstance(tri, UprightTriangle):
            c1, c2, c3 = tri.as_float()
            mask = (A >= c1) & (B >= c2) & (A + B <= c3)
        else:
            d1, d2, d3 = (float(v) for v in (tri.d1, tri.d2, tri.d3))
            mask = (A <= d1) & (B <= d2) & (A + B >= d3)
        img[mask] = value

    if "attractor" in layers:
        for t in ifs.level_triangles(n):
            paint(t, 192)
    if "overlaps" in layers and n >= 1:
        for t in ov_level(ifs, n).triangles:
            paint(t, 64)
    if "gaps" in layers:
        for t in gap_triangles(ifs, n):
            paint(t, 255)
    header = f"P5\n{size} {height}\n255\n".encode("ascii")
    return header + img.tobytes()


def render(ifs: IFS2D, n: int, layers=("attractor", "overlaps", "gaps"), fmt: str = "svg", **kw):
    if fmt == "svg":
        return render_svg(ifs, n, layers, **kw)
    if fmt == "pgm":
        return render_pgm(ifs, n, layers, **kw)
    raise ValueError(f"unsupported format {fmt!r}")
