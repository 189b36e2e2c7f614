import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifs_overlap.cascade import IFS1D, cascade_cdf
from ifs_overlap.transfer import (
    FunctionPair,
    SampledFunctionPair,
    apply_adjoint,
    apply_isometry,
    column_isometry_defect,
    defect_residual,
    defect_vector,
    lebesgue_contrast,
    pair_norm,
    projection_identity_check,
    quadrature_measure,
    range_projection_apply,
    rn_pair,
    rn_sum_check,
)

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.fixture(scope="module")
def golden18():
    ifs = IFS1D(GOLDEN)
    return ifs, rn_pair(ifs, 18)


def test_sum_is_two_off_overlap_exactly(golden18):
    ifs, (p0, p1) = golden18
    b = GOLDEN / (1 - GOLDEN)
    c = GOLDEN**2 / (1 - GOLDEN)
    x = np.concatenate([np.linspace(0, GOLDEN - 1e-9, 500), np.linspace(c + 1e-9, b, 500)])
    assert np.all(p0(x) + p1(x) == 2.0)


def test_sum_near_two_on_overlap(golden18):
    ifs, _ = golden18
    assert rn_sum_check(ifs, 18, np.linspace(0, 1 / (1 - GOLDEN) - 1, 1000)) <= 0.01


def test_midpoint_value_is_one(golden18):
    # symmetry F(u) + F(b − u) = 1 forces φ₀ = φ₁ = 1 at b/2
    ifs, (p0, p1) = golden18
    b = GOLDEN / (1 - GOLDEN)
    assert abs(p0(np.array([b / 2]))[0] - 1) < 1e-3
    assert abs(p1(np.array([b / 2]))[0] - 1) < 1e-3


def _bin_average_phi0(ifs, F, edges):
    # ∫_I φ₀ dμ = μ(τ₀⁻¹I), so the bin average of the true density is a CDF ratio
    lam = float(ifs.lam)
    a, b = edges[:-1], edges[1:]
    return (F(b / lam) - F(a / lam)) / (F(b) - F(a))


def test_closed_form_phi0_is_not_the_pushforward_density(golden18):
    # the closed form integrates to 1 and respects φ₀+φ₁=2, yet it is not dμ∘τ₀⁻¹/dμ on the
    # overlap: bin averages of the true density differ from it by far more than approximant error
    ifs, (p0, _) = golden18
    F = cascade_cdf(ifs, 22)
    c = GOLDEN**2 / (1 - GOLDEN)
    edges = np.linspace(GOLDEN, c, 9)
    true_avg = _bin_average_phi0(ifs, F, edges)
    assert np.all((true_avg >= 0) & (true_avg <= 2))
    mid = (edges[:-1] + edges[1:]) / 2
    assert np.max(np.abs(true_avg - p0(mid))) > 0.1
    m = quadrature_measure(ifs, 18)
    lhs = np.sum(m.weights * m.points * p0(m.points))
    rhs = np.sum(m.weights * GOLDEN * m.points)
    assert abs(np.sum(m.weights * p0(m.points)) - 1) < 5e-3
    assert abs(lhs - rhs) > 5e-3


def test_phi_is_density_of_pushforward_without_overlap():
    lam = 0.4
    ifs = IFS1D(lam)
    p0, _ = rn_pair(ifs, 16)
    m = quadrature_measure(ifs, 16)
    x, w = m.points, m.weights
    for f in (lambda y: y, lambda y: np.cos(3 * y)):
        # μ_n is invariant only up to its last level, hence the λⁿ-sized slack
        assert abs(np.sum(w * f(x) * p0(x)) - np.sum(w * f(lam * x))) < 4 * lam**16


def test_rn_eval_domain_and_flags(golden18):
    _, (p0, _) = golden18
    with pytest.raises(ValueError):
        p0.evaluate(np.array([-0.5]))
    r = p0.evaluate(np.array([GOLDEN, 0.1]))
    assert r.uncertain.tolist() == [True, False]


def test_small_lambda_densities_are_indicators():
    ifs = IFS1D(0.3)
    p0, p1 = rn_pair(ifs, 10)
    x = np.linspace(0, 0.3 / 0.7, 101)
    assert np.array_equal(p0(x), np.where(x < 0.3, 2.0, 0.0))
    assert np.array_equal(p0(x) + p1(x), np.full_like(x, 2.0))


def test_defect_vector_in_kernel_golden():
    d = defect_residual(IFS1D(GOLDEN), 18)
    assert d["norm"] > 0.5
    assert d["ratio"] <= 0.02


def test_defect_vector_vanishes_without_overlap():
    ifs = IFS1D(0.3)
    f = defect_vector(ifs, rn_pair(ifs, 10))
    x = np.linspace(0, 0.3 / 0.7, 501)
    assert not np.any(f.f0(x)) and not np.any(f.f1(x))


def test_projection_identity_without_overlap():
    assert projection_identity_check(IFS1D(0.3), 10, samples=8) <= 1e-12


def test_projection_nearly_idempotent_golden():
    assert projection_identity_check(IFS1D(GOLDEN), 18, samples=32) <= 0.05


def test_range_projection_on_sampled_pair():
    ifs = IFS1D(0.3)
    phis = rn_pair(ifs, 8)
    m = quadrature_measure(ifs, 8)
    s = FunctionPair(np.cos, np.sin).sample(m)
    out, exits = range_projection_apply(ifs, phis, s)
    assert isinstance(out, SampledFunctionPair)
    assert exits > 0
    with pytest.raises(ValueError):
        range_projection_apply(ifs, phis, FunctionPair(np.cos, np.sin))


def test_column_isometry_exact_golden():
    lhs, rhs = column_isometry_defect(IFS1D.from_spec("golden"), lambda x: x * x - 2 * x + 3, 10)
    assert lhs == rhs


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 0.9), st.integers(2, 12), st.integers(0, 3))
def test_column_isometry_float(lam, n, k):
    lhs, rhs = column_isometry_defect(IFS1D(lam), lambda x: np.cos(k * x) + x**k, n)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, rhs)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 0.49))
def test_adjoint_pairing(lam):
    # ⟨Fᵢf, g⟩ = ⟨f, Fᵢ*g⟩; below ½ the densities are exact indicators
    ifs = IFS1D(lam)
    phis = rn_pair(ifs, 16)
    m = quadrature_measure(ifs, 16)
    f, g = (lambda x: np.cos(x)), (lambda x: 1 + x**2)
    for i in (0, 1):
        lhs = m.integrate(lambda x: apply_isometry(ifs, i, f)(x) * g(x))
        rhs = m.integrate(lambda x: f(x) * apply_adjoint(ifs, phis[i], g)(x))
        assert abs(lhs - rhs) <= 4 * lam**16 * max(1.0, abs(lhs))


def test_lebesgue_densities_break_the_identity():
    r = lebesgue_contrast(IFS1D(GOLDEN), 14)
    assert r["rn"] < 0.05
    assert r["lebesgue"] > 5 * r["rn"]


def test_pair_norm_positive():
    m = quadrature_measure(IFS1D(0.6), 8)
    assert pair_norm(FunctionPair(np.ones_like, np.zeros_like), m) == pytest.approx(1.0)


def test_cdf_route_consistency():
    # densities built from the cascade approximant use the float cascade
    ifs = IFS1D.from_spec("golden")
    p0, _ = rn_pair(ifs, 12)
    assert not p0.F.exact
    assert p0.F.breakpoints.size == cascade_cdf(IFS1D(GOLDEN), 12).breakpoints.size
