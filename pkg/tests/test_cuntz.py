import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifs_overlap.cascade import IFS1D
from ifs_overlap.core import BudgetExceeded
from ifs_overlap.cuntz import (
    CylinderFunction,
    cuntz_identities,
    dilation_embed,
    dilation_isometry,
    dilation_isometry_exact,
    encode_words,
    inner,
    inner_parts,
    intertwining_check,
    minimality_density_check,
    shift_adjoint_apply,
    shift_isometry_apply,
)
from ifs_overlap.sierpinski import IFS2D

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("level", [0, 1, 4, 9])
def test_cuntz_identities_exact(N, level):
    if N == 3 and level == 9:
        level = 8
    r = cuntz_identities(N, level, rng=level)
    assert r == {"orthogonality": True, "completeness": True}


def test_shift_levels_move():
    psi = CylinderFunction.constant(2, 3)
    assert shift_isometry_apply(1, psi).level == 4
    assert shift_adjoint_apply(0, psi).level == 2
    with pytest.raises(ValueError):
        shift_adjoint_apply(0, CylinderFunction.constant(2, 0))
    with pytest.raises(ValueError):
        shift_isometry_apply(2, psi)


def test_isometry_preserves_inner_product_exactly():
    rng = np.random.default_rng(3)
    a = CylinderFunction(3, 4, rng.integers(-5, 6, 81))
    b = CylinderFunction(3, 4, rng.integers(-5, 6, 81))
    for i in range(3):
        assert inner_parts(shift_isometry_apply(i, a), shift_isometry_apply(i, b))[0] * 3 == inner_parts(a, b)[0]


def test_indicator_mass():
    ind = CylinderFunction.indicator(2, 5, (1, 0))
    assert inner_parts(ind, ind) == (Fraction(1, 4), 0)
    with pytest.raises(ValueError):
        CylinderFunction.indicator(2, 1, (1, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(1, 5), st.data())
def test_adjoint_relation(N, n, data):
    # ⟨Sᵢψ, χ⟩ = ⟨ψ, Sᵢ*χ⟩
    psi = CylinderFunction(N, n - 1, np.array(data.draw(st.lists(st.integers(-9, 9), min_size=N ** (n - 1), max_size=N ** (n - 1)))))
    chi = CylinderFunction(N, n, np.array(data.draw(st.lists(st.integers(-9, 9), min_size=N**n, max_size=N**n))))
    i = data.draw(st.integers(0, N - 1))
    assert inner(shift_isometry_apply(i, psi), chi) == pytest.approx(inner(psi, shift_adjoint_apply(i, chi)), abs=1e-12)


def test_encode_words_matches_direct_sum():
    ifs = IFS1D(0.6)
    pts = encode_words(ifs, 3)
    assert pts[5] == pytest.approx(0.6 * 1 + 0.36 * 0 + 0.216 * 1)


@pytest.mark.parametrize("lam", [0.3, GOLDEN, 0.75])
def test_intertwining_1d(lam):
    assert intertwining_check(IFS1D(lam), 10) <= 1e-14


@pytest.mark.parametrize("lam", [0.5, GOLDEN, 0.7])
def test_intertwining_2d(lam):
    assert intertwining_check(IFS2D(lam), 6) <= 1e-14


def test_dilation_isometry_exact_golden():
    ifs = IFS1D.from_spec("golden")
    lhs, rhs = dilation_isometry_exact(ifs, lambda x: x * x - 3 * x + 2, 10)
    assert lhs == rhs


def test_dilation_isometry_exact_rational():
    lhs, rhs = dilation_isometry_exact(IFS1D.from_spec("3/4"), lambda x: x + 1, 9)
    assert lhs == rhs


def test_dilation_isometry_exact_needs_exact_lambda():
    with pytest.raises(ValueError):
        dilation_isometry_exact(IFS1D(0.6), lambda x: x, 3)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 0.9), st.integers(1, 10))
def test_dilation_isometry_float(lam, n):
    lhs, rhs = dilation_isometry(IFS1D(lam), np.cos, n)
    assert abs(lhs - rhs) <= 1e-12


def test_dilation_isometry_2d():
    lhs, rhs = dilation_isometry(IFS2D(GOLDEN), lambda p: p[:, 0] - p[:, 1] ** 2, 6)
    assert abs(lhs - rhs) <= 1e-12


def test_dilation_budget():
    with pytest.raises(BudgetExceeded):
        dilation_embed(IFS1D(0.6), np.cos, 15)


@pytest.mark.parametrize("ifs, n", [(IFS1D(GOLDEN), 4), (IFS1D(0.3), 4), (IFS2D(GOLDEN), 3)])
def test_minimality(ifs, n):
    assert minimality_density_check(ifs, n) <= 1e-12


def test_minimality_fails_without_shifts():
    # with only k = 0 the span is one vector, far from the cylinder indicators
    ifs = IFS1D(GOLDEN)
    assert minimality_density_check(ifs, 0) == 0.0
    psi = dilation_embed(ifs, lambda x: np.ones_like(x), 3)
    e = np.zeros(8)
    e[0] = 1.0
    q = psi.dense() / np.linalg.norm(psi.dense())
    assert np.linalg.norm(e - (q @ e) * q) > 0.5
