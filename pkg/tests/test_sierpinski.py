import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifs_overlap.core import BudgetExceeded
from ifs_overlap.quadratic import golden_field
from ifs_overlap.sierpinski import (
    IFS2D,
    DownTriangle,
    UprightTriangle,
    chain_intersection,
    classify_regime,
    euclid_to_oblique,
    first_overlaps,
    gap_region,
    gap_side,
    gap_triangles,
    geometric_regime,
    golden_2d_report,
    hausdorff_dim,
    intersect_translates,
    measure2d_enclosure,
    monte_carlo_2d,
    oblique_to_euclid,
    ov01_region,
    ov_apply,
    ov_level,
    overlap2d_lower_bound,
    pairwise_interior_disjoint,
    render,
    render_pgm,
    render_svg,
    rotate120,
    same_triangle_sets,
    tau1_region,
    triple_overlap_check,
)

GOLDEN = (math.sqrt(5) - 1) / 2
GRID = [0.52, 0.55, 0.60, GOLDEN, 0.63, 0.65, 2 / 3, 0.70, 0.80]


def test_coordinate_round_trip():
    p = np.array([[0.3, 0.4], [1.0, 0.0], [0.0, 1.0]])
    assert np.allclose(euclid_to_oblique(oblique_to_euclid(p)), p)
    assert np.allclose(oblique_to_euclid(p[2:]), [[0.5, math.sqrt(3) / 2]])


def test_first_overlap_side_three_quarters():
    ifs = IFS2D.from_spec("3/4")
    sides = [t.side for t in first_overlaps(ifs)]
    assert all(s == Fraction(3, 2) for s in sides)


def test_overlap_area_against_raster():
    # Euclidean area √3/4·s² of τ₀T∩τ₁T against a point count on a fine grid
    ifs = IFS2D(0.75)
    t0, t1 = (ifs.tau(i, ifs.T) for i in (0, 1))
    s = t0.intersect(t1).side
    xs = np.linspace(0, 3, 1501)
    X, Y = np.meshgrid(xs, xs * math.sqrt(3) / 2)
    ob = euclid_to_oblique(np.stack([X, Y], axis=-1))
    A, B = ob[..., 0], ob[..., 1]

    def inside(t):
        c1, c2, c3 = t.as_float()
        return (A >= c1) & (B >= c2) & (A + B <= c3)

    cell = (xs[1] - xs[0]) ** 2 * math.sqrt(3) / 2
    area = np.sum(inside(t0) & inside(t1)) * cell
    assert area == pytest.approx(math.sqrt(3) / 4 * s * s, rel=1e-2)


def test_intersect_translates_kinds():
    a = UprightTriangle(0.0, 0.0, 1.0)
    assert intersect_translates(a, UprightTriangle(0.5, 0.0, 1.5))[1] == "triangle"
    assert intersect_translates(a, UprightTriangle(1.0, 0.0, 2.0))[1] == "contact"
    assert intersect_translates(a, UprightTriangle(1.5, 0.0, 2.5)) == (None, "empty")
    with pytest.raises(ValueError):
        intersect_translates(a, DownTriangle(1.0, 1.0, 1.0))


@pytest.mark.parametrize("lam", [0.55, GOLDEN, 0.75])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ov_counts(lam, n):
    assert len(ov_level(IFS2D(lam), n)) == 3**n


def test_ov_empty_at_gasket():
    assert len(ov_level(IFS2D(0.4), 2)) == 0
    c = ov_level(IFS2D(0.5), 2)
    assert len(c) == 0 and len(c.contacts) == 9


def test_level_one_overlaps_disjoint_deeper_not():
    assert ov_level(IFS2D(0.58), 2).disjoint
    assert not ov_level(IFS2D(0.58), 3).disjoint
    assert not ov_level(IFS2D.from_spec("golden"), 3).disjoint


def test_ov_operation_differs_from_level_sets():
    ifs = IFS2D(0.58)
    ov1 = ov_level(ifs, 1)
    assert len(ov_apply(ifs, ov1)) == 0
    assert not same_triangle_sets(ov_apply(ifs, ov1), ov_level(ifs, 2))


def test_ov_level_matches_words():
    ifs = IFS2D.from_spec("golden")
    base = first_overlaps(ifs)
    direct = [ifs.tau_word(w, t) for w in [(i, j) for i in range(3) for j in range(3)] for t in base]
    assert same_triangle_sets(direct, ov_level(ifs, 3))


@pytest.mark.parametrize("lam", GRID)
def test_regimes_agree(lam):
    assert classify_regime(lam).code == geometric_regime(IFS2D(lam)).code


@pytest.mark.parametrize(
    "spec, code",
    [("golden", "ii"), ("2/3", "iv"), ("3/5", "i"), ("13/20", "iii"), ("3/4", "v"), ("1/2", "gasket")],
)
def test_regimes_exact(spec, code):
    ifs = IFS2D.from_spec(spec)
    tag = classify_regime(ifs.lam)
    assert tag.code == code and not tag.ambiguous
    if code != "gasket":
        assert geometric_regime(ifs).code == code


def test_float_golden_regime_is_ambiguous():
    tag = classify_regime(GOLDEN)
    assert tag.code == "ii" and tag.ambiguous


def test_golden_sharing_pattern():
    ch = chain_intersection(IFS2D.from_spec("golden"), 1)
    assert ch.kind == "vertex-contacts"
    assert ch.upper_sharing == [4, 4, 4]
    assert set(ch.lower_sharing) == {1, 2}
    assert ch.lower_sharing == [1, 1, 2, 1, 2, 1, 2, 1, 1]


def test_gap_region_at_half_is_medial_triangle():
    g = gap_region(IFS2D.from_spec("1/2"))
    assert g.side == Fraction(1, 2)
    verts = {tuple(Fraction(x.a) for x in v) for v in g.triangle.vertices()}
    h = Fraction(1, 2)
    assert verts == {(0, h), (h, 0), (h, h)}


def test_gap_side_decreasing_and_closing():
    lams = np.linspace(0.501, 0.666, 50)
    sides = gap_side(lams)
    assert np.all(np.diff(sides) < 0) and np.all(sides > 0)
    g = gap_region(IFS2D.from_spec("2/3"))
    assert g.triangle is None and g.side == 0
    assert gap_region(IFS2D(0.8)).triangle is None
    assert not gap_region(IFS2D(0.4)).inside_envelope


@pytest.mark.parametrize("lam", [0.51, 0.55, 0.6, GOLDEN, 0.65])
def test_triple_overlap_empty_below_two_thirds(lam):
    assert triple_overlap_check(IFS2D(lam))


def test_triple_overlap_present_at_large_lambda():
    assert not triple_overlap_check(IFS2D(0.8))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 0.9), st.integers(0, 4))
def test_rotation_maps_level_set_to_itself(lam, n):
    ifs = IFS2D(lam)
    tris = ifs.level_triangles(n)
    rot = [rotate120(t, ifs.b) for t in tris]
    assert same_triangle_sets(rot, tris, tol=1e-9)


def test_rotation_permutes_first_level():
    ifs = IFS2D.from_spec("golden")
    imgs = [ifs.tau(i, ifs.T) for i in range(3)]
    assert rotate120(imgs[0], ifs.b) == imgs[1]
    assert rotate120(ifs.T, ifs.b) == ifs.T


def test_hausdorff_dimension():
    d, ok = hausdorff_dim(0.55)
    assert d == pytest.approx(1.8377, abs=1e-4) and ok
    assert hausdorff_dim(3**-0.5)[0] == pytest.approx(2.0)
    d, ok = hausdorff_dim(1 / 3)
    assert d == pytest.approx(1.0) and not ok


@pytest.mark.parametrize("lam, value, m", [(0.55, Fraction(1, 78), 3), (0.52, Fraction(1, 240), 4), (0.51, Fraction(1, 726), 5)])
def test_lower_bounds_below_golden(lam, value, m):
    r = overlap2d_lower_bound(lam)
    assert (r.value, r.m, r.verified) == (value, m, True)


def test_lower_bound_golden_and_above():
    g = overlap2d_lower_bound(golden_field().root)
    assert g.value == Fraction(1, 24) and g.verified
    assert not overlap2d_lower_bound(0.7).verified
    with pytest.raises(ValueError):
        overlap2d_lower_bound(0.5)


def _brute_enclosure(ifs, region, n):
    """Classify every τ_w(T), |w| = n, exactly against a single triangle."""
    inside = straddle = 0
    for t in ifs.level_triangles(n):
        if region.contains(t):
            inside += 1
        elif not (t.intersect(region).side < 0):
            straddle += 1
    return Fraction(inside, 3**n), Fraction(inside + straddle, 3**n)


@pytest.mark.parametrize("spec", ["3/5", "7/10"])
@pytest.mark.parametrize("which", [tau1_region, ov01_region])
def test_enclosure_against_full_enumeration(spec, which):
    ifs = IFS2D.from_spec(spec)
    region = which(ifs)
    lo, hi = _brute_enclosure(ifs, region, 7)
    e = measure2d_enclosure(IFS2D(float(ifs.lam)), UprightTriangle(*region.as_float()), 7)
    # the float route only loses cylinders that touch the boundary
    assert e.lo_exact <= lo and e.hi_exact == hi


def test_disk_reach_is_looser():
    ifs = IFS2D(0.6)
    t = measure2d_enclosure(ifs, tau1_region(ifs), 8)
    d = measure2d_enclosure(ifs, tau1_region(ifs), 8, reach="disk")
    assert d.lo_exact <= t.lo_exact and t.hi_exact <= d.hi_exact


def test_enclosure_agrees_with_monte_carlo():
    ifs = IFS2D(0.6)
    e = measure2d_enclosure(ifs, ov01_region(ifs), 10)
    est, se = monte_carlo_2d(0.6, [ov01_region(ifs)], count=400_000)
    assert float(e.lo_exact) - 4 * se <= est <= float(e.hi_exact) + 4 * se


def test_enclosure_guards():
    ifs = IFS2D(0.6)
    with pytest.raises(ValueError):
        measure2d_enclosure(ifs, ifs.T, 3, reach="box")
    with pytest.raises(BudgetExceeded):
        measure2d_enclosure(ifs, ifs.T, 41)
    # T touches its own boundary, so the safety margin keeps it straddling
    e = measure2d_enclosure(ifs, ifs.T, 0)
    assert (e.lo_exact, e.hi_exact) == (0, 1)


@pytest.fixture(scope="module")
def golden_report():
    return golden_2d_report(12)


def test_golden_tau1_mass_exceeds_three_eighths(golden_report):
    a = golden_report["tau1"]
    assert a.width <= 0.03
    assert a.lo_exact > Fraction(3, 8)
    assert a.contains(Fraction(3, 7))


def test_golden_identity_encloses_one(golden_report):
    assert golden_report["identity"].contains(1)
    assert golden_report["ov01"].lo_exact > Fraction(1, 24)


def test_level_triangles_budget():
    with pytest.raises(BudgetExceeded):
        IFS2D(0.6).level_triangles(14)


def test_pairwise_disjoint_detects_overlap():
    a = UprightTriangle(0.0, 0.0, 1.0)
    assert pairwise_interior_disjoint([a, UprightTriangle(1.0, 0.0, 2.0)])
    assert not pairwise_interior_disjoint([a, UprightTriangle(0.5, 0.0, 1.5)])


def test_render_svg_golden_depth_two():
    ifs = IFS2D.from_spec("golden")
    svg = render_svg(ifs, 2)
    assert svg == render_svg(IFS2D.from_spec("golden"), 2)
    group = svg.split('<g id="overlaps"')[1].split("</g>")[0]
    assert group.count("<polygon") == 9
    assert '<g id="gaps"' in svg


def test_render_layers():
    ifs = IFS2D(0.75)
    svg = render_svg(ifs, 2, layers=("overlaps",))
    assert 'id="attractor"' not in svg and 'id="overlaps"' in svg
    assert 'id="gaps"' not in render_svg(ifs, 2)
    with pytest.raises(ValueError):
        render_svg(ifs, 1, layers=("nope",))


def test_render_pgm():
    ifs = IFS2D.from_spec("golden")
    data = render_pgm(ifs, 3, size=64)
    assert data.startswith(b"P5\n64 55\n255\n")
    body = data.split(b"\n", 3)[3]
    assert len(body) == 64 * 55
    assert set(body) <= {64, 192, 255} and 64 in set(body)
    assert data == render(ifs, 3, fmt="pgm", size=64)
    with pytest.raises(ValueError):
        render(ifs, 1, fmt="png")


def test_gap_triangles_count():
    assert len(gap_triangles(IFS2D(0.55), 3)) == 1 + 3 + 9
    assert gap_triangles(IFS2D(0.7), 3) == []
