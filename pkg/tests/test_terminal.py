import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lifecycle_hara.errors import InfeasibleBudget
from lifecycle_hara.market import kernel_value, simulate_kernel_paths
from lifecycle_hara.preferences import floor_F2, utility_terminal
from lifecycle_hara.terminal import (policy_pi2, solve_lambda2, solve_terminal, terminal_rate,
                                     value_V2, wealth_V2)


@pytest.fixture(scope="module")
def f2_0(market, cashflows):
    return floor_F2(market, cashflows, 0.0)


@pytest.fixture(scope="module")
def sol(market, prefs_full, cashflows, f2_0):
    return solve_terminal(market, prefs_full, cashflows, f2_0 + 2.0e5)


def test_floor_discounting(market, cashflows, f2_0):
    assert f2_0 == pytest.approx(cashflows.F * np.exp(-0.2), rel=1e-14)
    assert floor_F2(market, cashflows, 40.0) == cashflows.F


def test_wealth_at_origin(sol):
    assert wealth_V2(sol, 0.0, 1.0) == pytest.approx(sol.v2, rel=1e-13)


def test_terminal_first_order_condition(sol):
    # marginal terminal utility equals lambda2 Z(T) on every state
    for z in (0.2, 1.0, 5.0):
        v = wealth_V2(sol, 40.0, z)
        h = 1e-6 * (v - sol.cashflows.F)
        mu = (utility_terminal(sol.prefs, sol.cashflows, v + h)
              - utility_terminal(sol.prefs, sol.cashflows, v - h)) / (2 * h)
        assert mu == pytest.approx(sol.lambda2 * z, rel=1e-6)


def test_budget_monte_carlo(sol, market):
    w = np.random.default_rng(3).standard_normal(400_000) * np.sqrt(40.0)
    w = w[:, None]
    z = kernel_value(market, 40.0, w)
    pv = z * wealth_V2(sol, 40.0, z)
    assert abs(pv.mean() - sol.v2) < 3 * pv.std() / np.sqrt(pv.size)


def test_discounted_wealth_is_martingale(sol, market):
    paths = simulate_kernel_paths(market, 40.0, 40, 50_000, seed=5)
    zv = paths.z * wealth_V2(sol, paths.t, paths.z)
    means = zv.mean(axis=0)
    se = zv.std(axis=0) / np.sqrt(zv.shape[0])
    assert np.all(np.abs(means - sol.v2) < 4 * se + 1e-9 * sol.v2)


def test_infeasible(market, prefs_full, cashflows, f2_0):
    with pytest.raises(InfeasibleBudget):
        solve_lambda2(market, prefs_full, cashflows, f2_0)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0, 40), logz=st.floats(-5, 5))
def test_wealth_above_floor_and_constant_multiple(sol, t, logz):
    z = np.exp(logz)
    v = wealth_V2(sol, t, z)
    f2 = floor_F2(sol.market, sol.cashflows, t)
    assert v > f2
    a = policy_pi2(sol, t, z)
    assert float(a.multiple) == pytest.approx(1 / (1 - sol.prefs.b_hat), rel=1e-12)
    assert a.weight[0] == pytest.approx(sol.market.direction[0] * (v - f2) / v / (1 - sol.prefs.b_hat),
                                        rel=1e-10)


def test_value_function_derivatives(market, prefs_full, cashflows, f2_0):
    v = f2_0 + 1e5
    val, d1, d2 = value_V2(market, prefs_full, cashflows, v)
    assert d1 == pytest.approx(solve_lambda2(market, prefs_full, cashflows, v), rel=1e-13)
    h = 1.0
    assert (value_V2(market, prefs_full, cashflows, v + h)[0]
            - value_V2(market, prefs_full, cashflows, v - h)[0]) / (2 * h) == pytest.approx(d1, rel=1e-7)
    assert d2 < 0


def test_value_equals_expected_utility(sol, market):
    w = np.random.default_rng(8).standard_normal(400_000) * np.sqrt(40.0)
    w = w[:, None]
    u = utility_terminal(sol.prefs, sol.cashflows, wealth_V2(sol, 40.0, kernel_value(market, 40.0, w)))
    val = value_V2(market, sol.prefs, sol.cashflows, sol.v2)[0]
    assert abs(u.mean() - val) < 3 * u.std() / np.sqrt(u.size)


def test_rate_formula(market, prefs_full):
    bh = prefs_full.b_hat
    assert terminal_rate(market, prefs_full) == pytest.approx(
        0.03 - bh * (0.005 - 0.5 * 0.2025 ** 2 * 0 - 0.5 * (0.045 / 0.2) ** 2 / (bh - 1)))


def test_value_near_floor_scales_like_power(market, prefs_full, cashflows, f2_0):
    eps = np.logspace(0, 2, 5)
    vals = np.array([value_V2(market, prefs_full, cashflows, f2_0 + e)[0] for e in eps])
    slope = np.polyfit(np.log(eps), np.log(np.abs(vals)), 1)[0]
    assert slope == pytest.approx(prefs_full.b_hat, abs=1e-3)


@pytest.mark.parametrize("t,z", [(5.0, 1.0), (30.0, 0.3)])
def test_exposure_sign_matches_direction(sol, t, z):
    a = policy_pi2(sol, t, z)
    assert np.sign(a.exposure[0]) == np.sign(sol.market.direction[0])
