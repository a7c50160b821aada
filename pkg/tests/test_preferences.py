import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad as scipy_quad

from lifecycle_hara.errors import ConfigError, FloorViolated, InvalidCurve
from lifecycle_hara.preferences import (CashflowModel, ExpCurve, PreferenceModel, ScaledExpCurve,
                                        TableCurve, arrow_pratt, curve_from_spec, floor_F,
                                        floor_F1, floor_F2, terminal_F_from_annuity,
                                        utility_consumption, utility_terminal)
from lifecycle_hara.quadrature import QuadSpec

from conftest import paper_income


def test_scaled_exp_year_totals():
    y = paper_income()
    from lifecycle_hara.quadrature import integrate
    assert integrate(y, 0.0, 1.0) == pytest.approx(26_200.0, rel=1e-13)
    assert integrate(y, 39.0, 40.0) == pytest.approx(y.year_total(39), rel=1e-13)
    assert y.year_total(39) == pytest.approx(58_736, abs=0.5)


def test_table_curve_interpolates():
    c = TableCurve([0.0, 10.0], [1.0, 3.0])
    assert c(5.0) == pytest.approx(2.0)
    with pytest.raises(InvalidCurve):
        TableCurve([0.0, 0.0], [1.0, 2.0])


def test_curve_specs_roundtrip():
    for curve in (ExpCurve(2.0, -0.1), ScaledExpCurve(100.0, 0.02), TableCurve([0, 1], [3, 4])):
        again = curve_from_spec(curve.to_spec())
        assert np.allclose(again(np.linspace(0, 2, 5)), curve(np.linspace(0, 2, 5)))
    with pytest.raises(ConfigError):
        curve_from_spec({"type": "spline"})


def test_floor_F1_vanishes_when_floor_equals_income(market):
    y = paper_income()
    cf = CashflowModel(y, y, 0.0, 40.0)
    assert np.allclose(floor_F1(market, cf, np.linspace(0, 40, 9)), 0.0, atol=1e-9)
    assert floor_F(market, cf, 13.0) == pytest.approx(0.0, abs=1e-9)


def test_floor_F1_at_horizon(market, cashflows):
    assert floor_F1(market, cashflows, 40.0) == 0.0


def test_floor_F1_at_zero_against_high_resolution(market, cashflows):
    f = floor_F1(market, cashflows, 0.0)
    fine = floor_F1(market, cashflows, 0.0, QuadSpec(16, 160))
    oracle, _ = scipy_quad(lambda s: np.exp(-0.005 * s) * (cashflows.cbar(s) - cashflows.y(s)),
                           0, 40, epsabs=1e-10, epsrel=1e-13)
    assert f < 0
    assert f == pytest.approx(fine, rel=1e-12)
    assert f == pytest.approx(oracle, rel=1e-10)


def test_floor_F2_examples(market, cashflows):
    assert floor_F2(market, cashflows, 40.0) == pytest.approx(cashflows.F)
    assert floor_F2(market, cashflows, 0.0) == pytest.approx(cashflows.F * np.exp(-0.2), rel=1e-14)
    zero = CashflowModel(cashflows.y, cashflows.cbar, 0.0, 40.0)
    assert floor_F2(market, zero, 12.0) == 0.0


def test_floor_F2_reference_value(market):
    # 435,125 * exp(-0.2) = 356,250.2 (the rounded figure 356,234 is an arithmetic slip)
    cf = CashflowModel(paper_income(), paper_income(), 435_125.0, 40.0)
    assert floor_F2(market, cf, 0.0) == pytest.approx(356_250.2, abs=0.1)


def test_floor_at_horizon_equals_terminal_floor(market, cashflows):
    assert floor_F(market, cashflows, 40.0) == pytest.approx(cashflows.F)


def test_floor_additivity(market, cashflows):
    t = np.random.default_rng(0).uniform(0, 40, 20)
    assert np.allclose(floor_F(market, cashflows, t),
                       floor_F1(market, cashflows, t) + floor_F2(market, cashflows, t), rtol=1e-14)


def test_floor_continuity(market, cashflows):
    t = np.linspace(0, 40, 4001)
    jumps = np.abs(np.diff(floor_F(market, cashflows, t)))
    assert jumps.max() < 1e-2 * np.abs(floor_F(market, cashflows, t)).max()


def test_terminal_floor_annuity():
    assert terminal_F_from_annuity(0.005, 20.8, 0.75 * paper_income().year_total(39) / 2) == \
        pytest.approx(435_125, abs=1)
    assert terminal_F_from_annuity(0.005, 0.0, 1000.0) == 0.0
    assert terminal_F_from_annuity(1e-12, 20.0, 10.0) == pytest.approx(200.0, rel=1e-10)
    assert terminal_F_from_annuity(0.0, 20.0, 10.0) == 200.0


def test_terminal_utility_unit_cushion(prefs_full, cashflows):
    bh = prefs_full.b_hat
    u = utility_terminal(prefs_full, cashflows, cashflows.F + (1 - bh))
    # F + (1 - b_hat) loses ~11 digits of the cushion to rounding
    assert u == pytest.approx(np.exp(-0.03 * 40) * (1 - bh) / bh, rel=1e-9)


def test_utilities_reject_floor_violations(prefs_full, cashflows):
    with pytest.raises(FloorViolated):
        utility_consumption(prefs_full, cashflows, 3.0, float(cashflows.cbar(3.0)))
    with pytest.raises(FloorViolated):
        utility_terminal(prefs_full, cashflows, cashflows.F)
    with pytest.raises(FloorViolated):
        arrow_pratt(prefs_full, cashflows, 3.0, 0.0, cashflows.F + 1)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0, 40), cushion=st.floats(100, 1e5))
def test_consumption_utility_concave_and_arrow_pratt(prefs_full, cashflows, t, cushion):
    c = float(cashflows.cbar(t)) + cushion
    h = 1e-4 * cushion
    u = lambda x: float(utility_consumption(prefs_full, cashflows, t, x))
    d1 = (u(c + h) - u(c - h)) / (2 * h)
    d2 = (u(c + h) - 2 * u(c) + u(c - h)) / h ** 2
    a1, _ = arrow_pratt(prefs_full, cashflows, t, c, cashflows.F + 1)
    assert d2 < 0
    assert -d2 / d1 == pytest.approx(float(a1), rel=1e-6)
    assert float(a1) * cushion == pytest.approx(1 - float(prefs_full.b(t)), rel=1e-12)


def test_terminal_arrow_pratt_at_unit_cushion(prefs_full, cashflows):
    _, a2 = arrow_pratt(prefs_full, cashflows, 0.0, float(cashflows.cbar(0)) + 1, cashflows.F + 1)
    assert a2 == pytest.approx(1 - prefs_full.b_hat)


def test_preference_domain_checks():
    with pytest.raises(InvalidCurve):
        PreferenceModel(0.03, 1.0, 1.0, ExpCurve(1.0), ExpCurve(-1.0))
    with pytest.raises(InvalidCurve):
        PreferenceModel(0.03, 1.0, -1.0, ExpCurve(1.0), ExpCurve(0.0))
    with pytest.raises(InvalidCurve):
        PreferenceModel(0.03, 1.0, -1.0, ExpCurve(1.0), ExpCurve(0.5, 0.1)).check_domain(40.0)
    with pytest.raises(InvalidCurve):
        PreferenceModel(0.03, 1.0, -1.0, ExpCurve(1.0),
                        TableCurve([0, 40], [-1.0, 0.5])).check_domain(40.0)
