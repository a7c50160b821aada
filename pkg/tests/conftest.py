import numpy as np
import pytest

from lifecycle_hara.calibration import PAPER_ESTIMATES, ModelVariant
from lifecycle_hara.market import MarketParams
from lifecycle_hara.merge import solve_split
from lifecycle_hara.preferences import (CashflowModel, ExpCurve, PreferenceModel, ScaledExpCurve,
                                        terminal_F_from_annuity)

ACCEPTANCE_LINES: list[str] = []

V0 = 250_000.0
T = 40.0


def paper_income():
    return ScaledExpCurve(26_200.0, 0.0207)


def paper_floor_rate():
    return ScaledExpCurve(14_880.0, 0.0193)


def paper_F() -> float:
    # replacement of 75% of final-year income, split between two, paid for 20.8 years
    return terminal_F_from_annuity(0.005, 20.8, 0.75 * paper_income().year_total(39) / 2)


@pytest.fixture(scope="session")
def market():
    return MarketParams.single(0.005, 0.05, 0.2, 100.0)


@pytest.fixture(scope="session")
def cashflows():
    return CashflowModel(paper_income(), paper_floor_rate(), paper_F(), T)


@pytest.fixture(scope="session")
def prefs_full():
    return PAPER_ESTIMATES[ModelVariant.FULL].prefs(0.03, 1.0)


@pytest.fixture(scope="session")
def prefs_const():
    return PAPER_ESTIMATES[ModelVariant.BOTH_CONST].pinned_for(ModelVariant.BOTH_CONST).prefs(0.03, 1.0)


@pytest.fixture(scope="session")
def prefs_equal_b():
    """Constant b equal to b_hat (the closed-form special case)."""
    p = PAPER_ESTIMATES[ModelVariant.BOTH_CONST]
    return PreferenceModel(0.03, 1.0, p.b_hat, ExpCurve(p.a0, 0.0), ExpCurve(p.b_hat, 0.0))


@pytest.fixture(scope="session")
def policy(market, prefs_full, cashflows):
    return solve_split(market, prefs_full, cashflows, V0)


@pytest.fixture(scope="session")
def policy_equal_b(market, prefs_equal_b, cashflows):
    return solve_split(market, prefs_equal_b, cashflows, V0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
