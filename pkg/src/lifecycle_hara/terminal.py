"""Terminal-wealth-only problem, all in closed form."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .consumption import Allocation, _allocation
from .errors import InfeasibleBudget
from .market import MarketParams
from .preferences import CashflowModel, PreferenceModel, floor_F2


def terminal_rate(market: MarketParams, prefs: PreferenceModel) -> float:
    """k = beta - b_hat (r - |gamma|^2 / (2 (b_hat - 1)))."""
    bh = prefs.b_hat
    return prefs.beta - bh * (market.r - 0.5 * market.gamma_sq / (bh - 1.0))


def wealth_growth(market: MarketParams, prefs: PreferenceModel, t):
    """exp(b_hat/(b_hat-1) (r - |gamma|^2/(2(b_hat-1))) t)."""
    bh = prefs.b_hat
    rate = bh / (bh - 1.0) * (market.r - 0.5 * market.gamma_sq / (bh - 1.0))
    return np.exp(rate * np.asarray(t, float))


def _cushion0(market, prefs, cashflows, v2):
    f2 = floor_F2(market, cashflows, 0.0)
    cushion = v2 - f2
    if not cushion > 0:
        raise InfeasibleBudget(f"v2={v2} must exceed F2(0)={f2}")
    return cushion


def solve_lambda2(market, prefs, cashflows, v2: float) -> float:
    cushion = _cushion0(market, prefs, cashflows, v2)
    bh = prefs.b_hat
    k = terminal_rate(market, prefs)
    return float(np.exp(-k * cashflows.T) * (1 - bh) ** (1 - bh) * prefs.a_hat * cushion ** (bh - 1))


@dataclass(frozen=True, eq=False)
class TerminalSolution:
    market: MarketParams
    prefs: PreferenceModel
    cashflows: CashflowModel
    v2: float
    lambda2: float
    f2_0: float


def solve_terminal(market, prefs, cashflows, v2: float) -> TerminalSolution:
    lam = solve_lambda2(market, prefs, cashflows, v2)
    return TerminalSolution(market, prefs, cashflows, float(v2), lam, floor_F2(market, cashflows, 0.0))


def terminal_cushion(sol: TerminalSolution, t, z):
    e = 1.0 / (sol.prefs.b_hat - 1.0)
    return (sol.v2 - sol.f2_0) * wealth_growth(sol.market, sol.prefs, t) * np.asarray(z, float) ** e


def wealth_V2(sol: TerminalSolution, t, z):
    out = terminal_cushion(sol, t, z) + floor_F2(sol.market, sol.cashflows, t)
    return float(out) if np.ndim(out) == 0 else out


def policy_pi2(sol: TerminalSolution, t, z) -> Allocation:
    t, z = np.broadcast_arrays(np.asarray(t, float), np.asarray(z, float))
    cushion = terminal_cushion(sol, t, z)
    f2 = floor_F2(sol.market, sol.cashflows, t)
    v2 = cushion + f2
    minus_y = cushion / (1.0 - sol.prefs.b_hat)
    return _allocation(sol.market.direction, cushion, minus_y, v2, np.abs(cushion) + np.abs(f2) + 1.0)


def value_V2(market, prefs, cashflows, v2: float) -> tuple[float, float, float]:
    cushion = _cushion0(market, prefs, cashflows, v2)
    bh = prefs.b_hat
    pre = np.exp(-terminal_rate(market, prefs) * cashflows.T) * prefs.a_hat
    value = pre * (1 - bh) ** (1 - bh) / bh * cushion ** bh
    first = pre * (1 - bh) ** (1 - bh) * cushion ** (bh - 1)
    second = -pre * (1 - bh) ** (2 - bh) * cushion ** (bh - 2)
    return float(value), float(first), float(second)
