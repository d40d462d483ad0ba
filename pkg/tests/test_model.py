import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amrcontrol.dynamics import IntegratorConfig, simulate_dimensional, simulate_dimensionless
from amrcontrol.model import (
    Controls,
    DimensionalParams,
    DimensionalState,
    DimensionlessParams,
    DimensionlessState,
    ParameterError,
    compute_thresholds,
    nondimensionalize,
    params_from_thresholds,
    rhs_dimensional,
    rhs_dimensionless,
    rhs_dimensionless_threshold,
)

from conftest import random_params

BASE = dict(beta_S=8.0, beta_R=0.64, alpha_bar=0.36, Lambda=8.0, gamma_bar=2.4, q_bar=0.64, a=1.0, K=1e5)

unit = st.floats(0.0, 1.0)
rate = st.floats(1e-4, 10.0)


def test_table_rates_scale_by_aK():
    dp = nondimensionalize(DimensionalParams(**BASE), Controls(0.5, 0.5))
    assert dp.beta_s == pytest.approx(8e-5, rel=1e-15)
    assert dp.beta_r == pytest.approx(0.64e-5)
    assert dp.q == pytest.approx(0.64 * 8 / 1e5)
    assert dp.alpha == pytest.approx(0.36 * 8 / 1e5)
    assert dp.gamma == pytest.approx(2.4e-5)
    assert (dp.h1, dp.h2, dp.time_scale) == (0.5, 0.5, 1e5)


def test_unit_scaling_is_identity():
    p = DimensionalParams(**dict(BASE, K=1.0))
    dp = nondimensionalize(p, Controls(0.2, 0.3))
    assert (dp.beta_s, dp.beta_r, dp.gamma) == (8.0, 0.64, 2.4)
    assert dp.q == 0.64 * 8.0 and dp.alpha == 0.36 * 8.0


@pytest.mark.parametrize("field,value", [("a", 0.0), ("K", -1.0), ("beta_S", 0.0), ("alpha_bar", 1.5),
                                         ("q_bar", 0.0), ("gamma_bar", -2.0), ("beta_R", 9.0)])
def test_invalid_dimensional_params_name_the_field(field, value):
    with pytest.raises(ParameterError) as err:
        DimensionalParams(**dict(BASE, **{field: value}))
    assert err.value.field == field


@pytest.mark.parametrize("h", [-0.1, 1.1, float("nan")])
def test_controls_outside_unit_interval_rejected(h):
    with pytest.raises(ParameterError):
        Controls(h, 0.0)


def test_negative_state_rejected():
    with pytest.raises(ParameterError):
        DimensionalState(-1.0, 0.0)
    with pytest.raises(ParameterError):
        DimensionlessState(0.0, float("inf"))


def test_dual_integration_matches_rescaled_time():
    p = DimensionalParams(**BASE)
    c = Controls(0.5, 0.5)
    dp = nondimensionalize(p, c)
    t = np.linspace(0, 10, 41)
    dim = simulate_dimensional(p, c, (1.0, 0.0), 10.0, t_eval=t)
    # absolute tolerance shrinks with the state scale 1/K
    cfg = IntegratorConfig(abs_tol=1e-10 / p.K)
    nod = simulate_dimensionless(dp, (1.0 / p.K, 0.0), 10.0 * dp.time_scale, cfg, t_eval=t * dp.time_scale)
    scale = np.max(np.abs(dim.states / p.K))
    assert np.max(np.abs(nod.states - dim.states / p.K)) < 1e-6 * scale


def test_full_control_zeroes_mutation_thresholds():
    th = compute_thresholds(DimensionlessParams(1e-3, 1e-4, 1e-4, 1e-3, 1e-4, 1.0, 1.0))
    assert (th.h_s, th.h_r1, th.h_r2) == (0.0, 0.0, 0.0)


def test_mutation_threshold_from_immune_rate():
    dp = DimensionlessParams(1e-3, 1e-5, 1e-4, 1e-3, 0.00012, 0.5, 0.5)
    assert compute_thresholds(dp).h_r1 == pytest.approx(4166.6667, abs=1e-3)


def test_threshold_definitions():
    dp = DimensionlessParams(0.3, 0.2, 0.05, 0.1, 0.04, 0.25, 0.6)
    th = compute_thresholds(dp)
    D = 0.1 + 0.04 + 0.05 * 0.75
    assert th.R_r == pytest.approx(0.2 / 0.04)
    assert th.R_s == pytest.approx(0.3 / D)
    assert th.h_s == pytest.approx(0.4 / D)
    assert th.h_r1 == pytest.approx(0.75 / 0.04)
    assert th.h_r2 == pytest.approx(0.4 / 0.04)


def test_closure_identity_random():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        dp = random_params(rng, h_interior=False)
        th = compute_thresholds(dp)
        assert th.h_r1 * dp.gamma + dp.h1 == pytest.approx(1.0, abs=1e-12)
        assert th.h_r2 * dp.gamma + dp.h2 == pytest.approx(1.0, abs=1e-12)


def test_params_from_thresholds_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(200):
        dp = random_params(rng)
        th = compute_thresholds(dp)
        back = params_from_thresholds(th.R_s, th.R_r, th.h_s, th.h_r1, th.h_r2, dp.q, dp.gamma)
        for name in ("beta_s", "beta_r", "q", "gamma", "h1", "h2"):
            assert getattr(back, name) == pytest.approx(getattr(dp, name), rel=1e-9, abs=1e-12)
        assert back.alpha == pytest.approx(dp.alpha, rel=1e-6)


def test_extinction_is_fixed_point():
    p = DimensionalParams(**BASE)
    assert np.all(rhs_dimensional((0.0, 0.0), p, Controls(0.3, 0.3)) == 0.0)


def test_full_mutation_block_without_resistance():
    p = DimensionalParams(**BASE)
    assert rhs_dimensional((123.0, 0.0), p, Controls(1.0, 0.2))[1] == 0.0


def test_transfer_terms_cancel_in_total():
    p = DimensionalParams(**BASE)
    rng = np.random.default_rng(3)
    for _ in range(1000):
        S, R = rng.uniform(0, p.K, size=2)
        h1, h2 = rng.uniform(0, 1, size=2)
        dS, dR = rhs_dimensional((S, R), p, Controls(h1, h2))
        crowd = 1 - (S + R) / p.K
        expect = p.beta_S * S * crowd + p.beta_R * R * crowd - (p.alpha_bar * p.Lambda + p.gamma_bar) * S \
            - p.gamma_bar * R
        scale = abs(p.beta_S * S) + abs(p.beta_R * R) + abs((1 - h2) * p.a * R * S) + p.Lambda * S + p.gamma_bar * (S + R)
        assert abs((dS + dR) - expect) <= 1e-12 * scale


@given(st.floats(0.0, 1.0), unit, unit)
def test_y_axis_invariant(y, h1, h2):
    dp = DimensionlessParams(0.5, 0.3, 0.01, 0.1, 0.2, h1, h2)
    assert rhs_dimensionless((0.0, y), dp)[0] == 0.0


@given(unit, unit)
def test_corner_value(h1, h2):
    dp = DimensionlessParams(0.5, 0.3, 0.01, 0.1, 0.2, h1, h2)
    f = rhs_dimensionless((0.0, 1.0), dp)
    assert f[0] == 0.0 and f[1] == pytest.approx(-0.2, abs=1e-15)


def test_raw_and_threshold_forms_agree():
    rng = np.random.default_rng(4)
    for _ in range(2000):
        dp = random_params(rng)
        x, y = rng.uniform(0, 1, size=2)
        raw = rhs_dimensionless((x, y), dp)
        thr = rhs_dimensionless_threshold((x, y), dp)
        mag1 = dp.beta_s * x * (1 + x + y) + dp.removal * x + x * y
        mag2 = dp.beta_r * y * (1 + x + y) + dp.q * x + x * y + dp.gamma * y
        assert abs(raw[0] - thr[0]) <= 1e-12 * mag1
        assert abs(raw[1] - thr[1]) <= 1e-12 * mag2


def test_threshold_form_undefined_at_full_transfer_block():
    dp = DimensionlessParams(0.5, 0.3, 0.01, 0.1, 0.2, 0.5, 1.0)
    with pytest.raises(ParameterError):
        rhs_dimensionless_threshold((0.1, 0.1), dp)


@settings(max_examples=50)
@given(rate, st.floats(0.0, 1.0), rate, st.floats(0.01, 1.0), rate, st.floats(0.01, 1.0))
def test_dimensional_rhs_equals_scaled_dimensionless(beta, ratio, gamma_bar, alpha_bar, lam, q_bar):
    p = DimensionalParams(beta, beta * max(ratio, 1e-3), alpha_bar, lam, gamma_bar, q_bar, 0.5, 200.0)
    c = Controls(0.3, 0.7)
    dp = nondimensionalize(p, c)
    S, R = 37.0, 81.0
    f = rhs_dimensionless((S / p.K, R / p.K), dp)
    d = rhs_dimensional((S, R), p, c)
    # dS/dt = K * a K * f
    assert np.allclose(d, f * p.K * dp.time_scale, rtol=1e-10, atol=1e-12 * np.max(np.abs(d)))


def test_replace_revalidates():
    p = DimensionalParams(**BASE)
    assert p.replace(alpha_bar=0.5).alpha_bar == 0.5
    with pytest.raises(ParameterError):
        p.replace(beta_R=100.0)
    assert math.isclose(DimensionlessParams(1, 0.5, 0.1, 0.1, 0.1, 0.5, 0.5).removal, 0.25)
