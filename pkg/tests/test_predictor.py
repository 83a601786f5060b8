import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padecache.errors import CoeffArityMismatch, InsufficientHistory, OutOfRange, UnsupportedOrder
from padecache.predictor import (
    Phase,
    PhaseConfig,
    RationalCoeffs,
    adaptive_coefficients,
    pade21_predict,
    phase_of,
    rational_predict,
    reconstruct_output,
    stability_factor,
    step_aware_predict,
    step_aware_predict_with_diagnostics,
    taylor_extrapolate,
    taylor_predict,
)
from padecache.tensor import FeatureTensor

from conftest import vector_pairs, vectors

# --------------------------------------------------------- stability factor


def test_stability_equal_inputs():
    assert stability_factor([1, 1], [1, 1], 10) == 1.0


def test_stability_orthogonal():
    # |diff| = |sum| = sqrt(2) -> exp(-10)
    assert stability_factor([1, 0], [0, 1], 10) == pytest.approx(4.539992976248485e-05, abs=1e-9)


def test_stability_colinear():
    # |diff| = 1, |sum| = 3
    assert stability_factor([2, 0], [1, 0], 10) == pytest.approx(0.035673993347252395, abs=1e-6)


def test_stability_rejects_bad_lambda():
    with pytest.raises(OutOfRange):
        stability_factor([1], [1], 0.0)


@given(vector_pairs(max_dim=32, elements=st.floats(-100, 100)), st.floats(0.1, 50))
def test_stability_in_unit_interval(pair, lam):
    a, b = pair
    s = stability_factor(a, b, lam)
    assert 0.0 <= s <= 1.0
    if np.array_equal(a, b):
        assert s == 1.0


@given(vector_pairs(max_dim=32, elements=st.floats(-100, 100)), st.sampled_from([-3.0, 0.5, 10.0]))
def test_stability_scale_invariant(pair, c):
    a, b = pair
    assert abs(stability_factor(c * a, c * b, 10) - stability_factor(a, b, 10)) <= 1e-12


# ------------------------------------------------------------ coefficients


def test_coefficients_at_full_stability():
    c = adaptive_coefficients(1.0, 10.0)
    assert (c.b0, c.b1, c.a1) == (2.0, -1.0, 0.1)


@pytest.mark.parametrize("sigma, expected", [(0.0, (0.0, 0.0, 0.0)), (0.5, (1.0, -0.5, 0.05))])
def test_coefficients_scale_linearly(sigma, expected):
    c = adaptive_coefficients(sigma, 10.0)
    assert (c.b0, c.b1, c.a1) == pytest.approx(expected)
    assert c.sigma == sigma and c.lam == 10.0


@given(st.floats(1e-6, 1.0), st.floats(0.1, 100))
def test_coefficient_ratio_fixed(sigma, lam):
    c = adaptive_coefficients(sigma, lam)
    assert c.b0 / c.b1 == -2.0
    assert c.a1 == sigma / lam


@pytest.mark.parametrize("sigma", [-0.1, 1.5, math.nan])
def test_coefficients_out_of_range(sigma):
    with pytest.raises(OutOfRange):
        adaptive_coefficients(sigma, 10.0)


# ------------------------------------------------------------ [2/1] predictor


def test_pade_zero_residuals():
    out, _ = pade21_predict([0], [0], [0])
    assert out.tolist() == [0.0]


def test_pade_constant_residuals():
    out, diag = pade21_predict([1], [1], [1], 10)
    assert out.tolist()[0] == pytest.approx(1 / 1.1, abs=1e-9)
    assert diag.sigma == 1.0


def test_pade_hand_example():
    # sigma = 1 since r1 == r2; (2*4 - 2) / (1 + 0.1*2)
    out, _ = pade21_predict([4], [2], [2], 10)
    assert out.tolist()[0] == pytest.approx(5.0, abs=1e-9)


def test_pade_newest_first_swaps_roles():
    out, _ = pade21_predict([4], [2], [2], 10, index_order="newest_first")
    # (2*2 - 2) / (1 + 0.1*4)
    assert out.tolist()[0] == pytest.approx(2 / 1.4, abs=1e-12)


def test_pade_large_lambda_limit():
    rng = np.random.default_rng(7)
    r3, r2 = rng.normal(size=16), rng.normal(size=16)
    out, _ = pade21_predict(r3, r2, r2, 1e9)
    assert np.allclose(out.data, 2 * r3 - r2, atol=1e-6, rtol=0)


def test_pade_pole_guard_keeps_output_finite():
    # 1 + 0.1 * (-10) = 0 exactly: the guarded denominator kicks in
    out, _ = pade21_predict([1.0], [-10.0], [-10.0], 10)
    assert np.isfinite(out.data).all()
    assert out.tolist()[0] == pytest.approx((2 * 1.0 + 10.0) / 1e-6)


@given(st.integers(0, 2**32 - 1))
def test_pade_matches_rational_bitwise(seed):
    rng = np.random.default_rng(seed)
    r3, r2, r1 = (FeatureTensor.of(rng.normal(size=32)) for _ in range(3))
    out, diag = pade21_predict(r3, r2, r1, 10)
    general = rational_predict([r3, r2, r1], RationalCoeffs.from_pade(diag.coefficients))
    assert np.array_equal(out.data, general.data)


# --------------------------------------------------------- general rational


def test_rational_matches_pade_value():
    out = rational_predict([[1], [1], [1]], RationalCoeffs((2, -1), (0.1,)))
    assert out.tolist()[0] == pytest.approx(1 / 1.1, abs=1e-12)


def test_rational_numerator_only():
    assert rational_predict([[5], [3]], RationalCoeffs((1, 0))).tolist() == [5.0]


def test_rational_zero_history():
    assert rational_predict([[0], [0], [0]], RationalCoeffs((3.0,), (0.4, -2.0))).tolist() == [0.0]


def test_rational_longer_history_brute_force():
    # k = 5, m = 2: (b0 h0 + b1 h1 + b2 h2) / (1 + a1 h3 + a2 h4), evaluated by hand per element
    hist = [[1.0, 2.0], [0.5, -1.0], [2.0, 0.0], [0.1, 0.3], [-0.2, 0.5]]
    num, den = (0.5, 1.5, -0.25), (0.3, 0.7)
    expected = []
    for e in range(2):
        n = sum(b * hist[i][e] for i, b in enumerate(num))
        d = 1 + sum(a * hist[3 + j][e] for j, a in enumerate(den))
        expected.append(n / d)
    assert rational_predict(hist, RationalCoeffs(num, den)).tolist() == pytest.approx(expected, rel=1e-14)


def test_rational_arity_checked():
    with pytest.raises(CoeffArityMismatch):
        rational_predict([[1], [1], [1]], RationalCoeffs((1, 1)))
    with pytest.raises(CoeffArityMismatch):
        RationalCoeffs(())
    with pytest.raises(InsufficientHistory):
        rational_predict([[1]], RationalCoeffs((1,)))


# ------------------------------------------------------------ reconstruction


@pytest.mark.parametrize("prev, res, expected", [([1], [0.5], [1.5]), ([3, 4], [0, 0], [3, 4]), ([2, -1], [-2, 1], [0, 0])])
def test_reconstruct(prev, res, expected):
    assert reconstruct_output(prev, res).tolist() == expected


# ---------------------------------------------------------- step-aware phases


def test_early_phase_weighted_mix():
    out = step_aware_predict([[0], [1]], t=15, total_steps=20)
    assert out.tolist()[0] == pytest.approx(0.7)


def test_mid_phase_is_pade():
    out = step_aware_predict([[1], [1], [1]], t=10, total_steps=20)
    assert out.tolist()[0] == pytest.approx(1 / 1.1, abs=1e-9)


def test_late_phase_adds_velocity():
    out = step_aware_predict([[1], [1], [1]], t=3, total_steps=20)
    assert out.tolist()[0] == pytest.approx(1 / 1.1, abs=1e-9)
    out, diag = step_aware_predict_with_diagnostics([[1], [2], [3]], t=3, total_steps=20)
    pade, _ = pade21_predict([1], [2], [3])
    assert out.tolist()[0] == pytest.approx(pade.tolist()[0] + 0.1 * (3 - 2))
    assert diag.phase is Phase.LATE


def test_phase_boundaries_literal():
    # 0.7 * 20 = 14 and 0.2 * 20 = 4: t = 14 and t = 4 are both mid
    assert phase_of(15, 20) is Phase.EARLY
    assert phase_of(14, 20) is Phase.MID
    assert phase_of(4, 20) is Phase.MID
    assert phase_of(3, 20) is Phase.LATE


def test_phase_history_requirements():
    with pytest.raises(InsufficientHistory):
        step_aware_predict([[1], [1]], t=10, total_steps=20)
    with pytest.raises(InsufficientHistory):
        step_aware_predict([[1]], t=18, total_steps=20)
    with pytest.raises(OutOfRange):
        step_aware_predict([[1], [1], [1]], t=20, total_steps=20)


def test_phase_config_invariants():
    with pytest.raises(OutOfRange):
        PhaseConfig(alpha1=0.6, alpha2=0.6)
    with pytest.raises(OutOfRange):
        PhaseConfig(early_frac=0.2, late_frac=0.7)


@given(st.integers(1, 200), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_phases_partition_every_step(total, f1, f2):
    late, early = sorted((f1, f2))
    if late == early:
        return
    cfg = PhaseConfig(early_frac=early, late_frac=late)
    for t in range(total):
        hits = [t > early * total, late * total <= t <= early * total, t < late * total]
        assert sum(hits) == 1
        assert phase_of(t, total, cfg) is [Phase.EARLY, Phase.MID, Phase.LATE][hits.index(True)]


# -------------------------------------------------------------------- Taylor


def test_taylor_constant():
    assert taylor_predict([[2.5], [2.5], [2.5]], 2).tolist() == [2.5]


def test_taylor_linear():
    assert taylor_predict([[0], [1], [2]], 1).tolist() == [3.0]


def test_taylor_quadratic_brute_force():
    # order-2 backward differences: check against direct evaluation of s**2 at s = 3
    seq = [[float(s**2)] for s in range(3)]
    assert taylor_predict(seq, 2).tolist() == [9.0]


@pytest.mark.parametrize("order", [1, 2])
def test_taylor_exact_on_polynomials(order):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        coeffs = rng.uniform(-5, 5, size=(order + 1, 8))
        start = rng.integers(0, 10)
        s = np.arange(start, start + order + 2, dtype=float)
        values = np.array([np.polyval(coeffs, si) for si in s])
        pred = taylor_predict(values[:-1], order)
        assert np.max(np.abs(pred.data - values[-1])) < 1e-9


def test_taylor_errors():
    with pytest.raises(UnsupportedOrder):
        taylor_predict([[1]] * 5, 3)
    with pytest.raises(InsufficientHistory):
        taylor_predict([[1], [2]], 2)


def test_spaced_extrapolation_matches_unit_spacing(rng):
    hist = rng.normal(size=(3, 5))
    a = taylor_predict(hist, 2).data
    b = taylor_extrapolate(hist, [4, 5, 6], 7, 2).data
    assert np.allclose(a, b, atol=1e-12)


def test_spaced_extrapolation_exact_on_uneven_grid(rng):
    coeffs = rng.normal(size=(3, 4))
    steps = [0.0, 1.0, 4.0]
    values = [np.polyval(coeffs, s) for s in steps]
    out = taylor_extrapolate(values, steps, 6.0, 2)
    assert np.allclose(out.data, np.polyval(coeffs, 6.0), atol=1e-10)


def test_stability_opposite_residuals_stay_positive():
    sigma = stability_factor([1.0, 2.0], [-1.0, -2.0], 10)
    assert 0 < sigma < 1e-300
