from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifs_overlap.cascade import (
    IFS1D,
    cascade_cdf,
    cascade_counts,
    cascade_sequence,
    d1_distance,
    encode_point,
    hutchinson_iterate,
    node_set,
    node_set_naive,
    scaling_residual,
    step_dominates,
)
from ifs_overlap.core import BudgetExceeded, all_words, dirac


def golden_node_count_oracle(n: int) -> int:
    """Distinct Σ ωₖλᵏ at the golden ratio, on integer pairs (A, B) ↦ A + Bλ with λ² = 1 − λ."""
    A, B = [0], [1]
    for _ in range(n - 1):
        # λ·(A + Bλ) = B + (A − B)λ
        A.append(B[-1])
        B.append(A[-2] - B[-1])
    W = all_words(n).astype(np.int64)
    pairs = np.stack([W @ np.array(A, dtype=np.int64), W @ np.array(B, dtype=np.int64)], axis=1)
    return len(np.unique(pairs, axis=0))


@pytest.mark.parametrize("n, count", [(3, 7), (10, 232), (16, 4180)])
def test_golden_node_counts(n, count):
    assert golden_node_count_oracle(n) == count
    assert len(node_set(IFS1D.from_spec("golden"), n)) == count


def test_golden_node_count_depth_20():
    assert len(node_set(IFS1D.from_spec("golden"), 20)) == 28656


def test_golden_level_three_multiplicities():
    ns = node_set(IFS1D.from_spec("golden"), 3)
    assert ns.multiplicities() == {1: 6, 2: 1}
    g = IFS1D.from_spec("golden").lam
    double = [v for v, c in zip(ns.values, ns.counts) if c == 2]
    assert double == [g]  # λ = λ² + λ³


def test_order_reversal_at_055():
    ifs = IFS1D(0.55)
    ns = node_set(ifs, 3)
    assert len(ns) == 8
    assert 0.55 > 0.55**2 + 0.55**3


@pytest.mark.parametrize("spec", ["golden", "3/4", "11/20", "2/5", "0.6", "0.8"])
def test_outer_sum_matches_per_word(spec):
    ifs = IFS1D.from_spec(spec)
    for n in range(0, 11):
        a, b = node_set(ifs, n), node_set_naive(ifs, n)
        if ifs.exact:
            assert a.values == b.values and tuple(a.counts) == tuple(b.counts)
        else:
            assert np.allclose(a.values, b.values) and np.array_equal(a.counts, b.counts)


@pytest.mark.parametrize("spec", ["golden", "3/4", "11/20", "0.6", "0.3"])
def test_cascade_routes_agree(spec):
    ifs = IFS1D.from_spec(spec)
    for n in (0, 1, 5, 12):
        A, B = cascade_cdf(ifs, n), cascade_cdf(ifs, n, route="nodes")
        if ifs.exact:
            assert A.breakpoints == B.breakpoints and A.values == B.values
        else:
            assert np.allclose(A.breakpoints, B.breakpoints, atol=1e-12)
            assert np.array_equal(cascade_counts(A, n), cascade_counts(B, n))


def test_encode_point_example():
    v, tail = encode_point(IFS1D.from_spec("3/4"), (1, 0, 0))
    assert v == Fraction(3, 4)
    assert tail == Fraction(81, 64)  # 1.265625


def test_hutchinson_two_steps_at_three_quarters():
    ifs = IFS1D.from_spec("3/4")
    m = hutchinson_iterate(ifs, dirac(ifs.lam * 0, exact=True), 2)
    assert [float(p) for p in m.points] == [0, 0.5625, 0.75, 1.3125]
    assert m.weights == (Fraction(1, 4),) * 4


def test_hutchinson_equals_node_measure():
    ifs = IFS1D.from_spec("golden")
    m = hutchinson_iterate(ifs, dirac(ifs.lam * 0, exact=True), 8)
    ns = node_set(ifs, 8).measure()
    assert m.points == ns.points and m.weights == ns.weights


def test_d1_contracts_with_ratio_at_most_lambda():
    ifs = IFS1D.from_spec("3/4")
    ms = [node_set(ifs, n).measure() for n in range(1, 11)]
    d = [d1_distance(ms[k], ms[k + 1]) for k in range(len(ms) - 1)]
    ratios = [d[k + 1] / d[k] for k in range(len(d) - 1)]
    assert all(r <= Fraction(3, 4) for r in ratios)
    # d₁(Tⁿδ₀, Tⁿ⁺¹δ₀) = ½λⁿ⁺¹ exactly (the mean moves by that much and Fₙ ≥ Fₙ₊₁)
    assert d[0] == Fraction(9, 32)


def test_d1_float_matches_exact():
    ex = IFS1D.from_spec("golden")
    fl = IFS1D(float(ex.lam))
    a, b = node_set(ex, 6).measure(), node_set(ex, 9).measure()
    fa, fb = node_set(fl, 6).measure(), node_set(fl, 9).measure()
    assert abs(float(d1_distance(a, b)) - d1_distance(fa, fb)) < 1e-12


def test_budget_enforced():
    with pytest.raises(BudgetExceeded):
        node_set(IFS1D.from_spec("golden"), 21)
    with pytest.raises(BudgetExceeded):
        node_set(IFS1D(0.6), 27)


def test_cascade_beyond_attractor_is_one():
    ifs = IFS1D.from_spec("golden")
    for F in cascade_sequence(ifs, 10):
        assert F.breakpoints[-1] <= ifs.b and F.values[-1] == 1


def test_scaling_residual_equals_successive_difference():
    # F_{n+1} = ½(F_n(x/λ) + F_n((x−λ)/λ)) exactly, so the residual of F_n is sup|F_n − F_{n+1}|
    ifs = IFS1D(0.7)
    grid = np.linspace(-0.2, 2.6, 4096)
    for n in (4, 8, 12):
        F, G = cascade_cdf(ifs, n), cascade_cdf(ifs, n + 1)
        assert scaling_residual(ifs, F, grid) == pytest.approx(np.max(np.abs(F(grid) - G(grid))), abs=1e-15)


lambdas = st.fractions(min_value=Fraction(3, 10), max_value=Fraction(9, 10), max_denominator=12)


@settings(max_examples=25, deadline=None)
@given(lambdas, st.integers(1, 8))
def test_cascade_monotone_in_depth(lam, n):
    ifs = IFS1D.from_spec(f"{lam.numerator}/{lam.denominator}")
    seq = cascade_sequence(ifs, n)
    assert all(step_dominates(seq[k], seq[k + 1]) for k in range(n))


@settings(max_examples=25, deadline=None)
@given(lambdas, st.integers(1, 8))
def test_refinement_identity_exact(lam, n):
    ifs = IFS1D.from_spec(f"{lam.numerator}/{lam.denominator}")
    F, G = cascade_cdf(ifs, n - 1), cascade_cdf(ifs, n)
    l = ifs.lam
    for x in G.breakpoints + tuple(F.breakpoints):
        assert G(x) == (F(x / l) + F(x / l - 1)) / 2


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 0.95), st.integers(1, 12))
def test_node_mass_and_symmetry_float(lam, n):
    ifs = IFS1D(lam)
    ns = node_set(ifs, n)
    assert ns.total == 2**n
    s = sum(ifs.powers(n))
    v = ns.float_values()
    assert np.allclose(np.sort(s - v), v, atol=1e-9)
