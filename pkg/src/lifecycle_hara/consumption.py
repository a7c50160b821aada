"""Consumption-only problem: multiplier, consumption, wealth and PPI allocation.

All state-dependent quantities are written in terms of

    g(s, t) = (1 - b(s)) * (exp(beta s - b(s) kappa(s) (s - t)) / a(s))^e(s) * lambda^e(s)

with ``e(s) = 1 / (b(s) - 1)`` and ``kappa(s) = r - |gamma|^2 e(s) / 2``.  They are
evaluated in log space because the multiplier can be as small as 1e-30.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Degenerate, InfeasibleBudget, NonFinite
from .market import MarketParams, kernel_power_moment
from .preferences import CashflowModel, PreferenceModel, floor_F1, is_constant
from .quadrature import (DEFAULT_QUAD, DEFAULT_ROOT, QuadSpec, RootSpec, bracket_increasing,
                         find_root, rule)

ZERO_WEALTH_RTOL = 1e-12
T_TILDE_GRID = 64


def _exponent(b):
    return 1.0 / (b - 1.0)


def log_g(market: MarketParams, prefs: PreferenceModel, s, t, log_lam: float):
    """log g(s, t) for broadcastable ``s`` and ``t``."""
    b = prefs.b(s)
    e = _exponent(b)
    kappa = market.r - 0.5 * e * market.gamma_sq
    inner = prefs.beta * s - b * kappa * (s - t) - np.log(prefs.a(s)) + log_lam
    return np.log1p(-b) + e * inner


def budget_integral(market, prefs, cashflows, log_lam: float, quad: QuadSpec = DEFAULT_QUAD) -> float:
    s, w = rule(0.0, cashflows.T, quad)
    return float(np.dot(np.exp(log_g(market, prefs, s, 0.0, log_lam)), w))


def solve_log_lambda1(market, prefs, cashflows, v1: float, quad: QuadSpec = DEFAULT_QUAD,
                      root: RootSpec = DEFAULT_ROOT, f1_0: float | None = None) -> float:
    f1_0 = floor_F1(market, cashflows, 0.0, quad) if f1_0 is None else f1_0
    cushion = v1 - f1_0
    if not cushion > 0:
        raise InfeasibleBudget(f"v1={v1} must exceed F1(0)={f1_0}")
    log_target = np.log(cushion)

    # log of the budget integral is decreasing in log lambda; negate to get an increasing map
    def h(x):
        val = budget_integral(market, prefs, cashflows, x, quad)
        if not np.isfinite(val):
            return np.inf if x < 0 else -np.inf
        return log_target - np.log(val) if val > 0 else np.inf

    lo, hi = bracket_increasing(h, 0.0, 1.0)
    if lo == hi:
        return lo
    return find_root(h, lo, hi, RootSpec(root.abs_tol, min(root.rel_tol, 1e-13), root.max_iter))


def solve_lambda1(market, prefs, cashflows, v1: float, quad: QuadSpec = DEFAULT_QUAD,
                  root: RootSpec = DEFAULT_ROOT) -> float:
    return float(np.exp(solve_log_lambda1(market, prefs, cashflows, v1, quad, root)))


@dataclass(frozen=True)
class Allocation:
    """Relative weights together with the currency exposure they imply."""

    weight: np.ndarray
    exposure: np.ndarray
    wealth: np.ndarray
    multiple: np.ndarray
    zero_wealth: np.ndarray


@dataclass(frozen=True, eq=False)
class ConsumptionSolution:
    market: MarketParams
    prefs: PreferenceModel
    cashflows: CashflowModel
    v1: float
    log_lambda1: float
    quad: QuadSpec = DEFAULT_QUAD
    root: RootSpec = DEFAULT_ROOT

    @property
    def lambda1(self) -> float:
        return float(np.exp(self.log_lambda1))

    @property
    def T(self) -> float:
        return self.cashflows.T


def solve_consumption(market, prefs, cashflows, v1: float, quad: QuadSpec = DEFAULT_QUAD,
                      root: RootSpec = DEFAULT_ROOT) -> ConsumptionSolution:
    prefs.check_domain(cashflows.T)
    x = solve_log_lambda1(market, prefs, cashflows, v1, quad, root)
    return ConsumptionSolution(market, prefs, cashflows, float(v1), x, quad, root)


def g_kernel(sol: ConsumptionSolution, s, t):
    return np.exp(log_g(sol.market, sol.prefs, np.asarray(s, float), np.asarray(t, float),
                        sol.log_lambda1))


def consumption_rate(sol: ConsumptionSolution, t, z):
    t = np.asarray(t, dtype=float)
    e = _exponent(sol.prefs.b(t))
    return g_kernel(sol, t, t) * np.asarray(z, float) ** e + sol.cashflows.cbar(t)


def cushion_integrals(sol: ConsumptionSolution, t, z):
    """Return (I0, I1, F1) with I0 = int g z^e ds and I1 = int e g z^e ds over [t, T].

    ``t`` and ``z`` broadcast; node-dependent factors are computed once per
    distinct time so that many states at one date cost one exp per node.
    """
    t, z = np.broadcast_arrays(np.asarray(t, float), np.asarray(z, float))
    shape = t.shape
    ut, inv = np.unique(t.ravel(), return_inverse=True)
    s, w = rule(ut, sol.T, sol.quad)
    lg = log_g(sol.market, sol.prefs, s, ut[:, None], sol.log_lambda1)
    e = _exponent(sol.prefs.b(s))
    f1 = np.atleast_1d(floor_F1(sol.market, sol.cashflows, ut, sol.quad))
    logz = np.log(z.ravel())[:, None]
    if ut.size == 1:
        G = np.exp(lg[0] + e[0] * logz) * w[0]
        i0 = G.sum(axis=-1)
        i1 = G @ e[0]
    else:
        G = np.exp(lg[inv] + e[inv] * logz) * w[inv]
        i0 = G.sum(axis=-1)
        i1 = np.sum(G * e[inv], axis=-1)
    if not (np.all(np.isfinite(i0)) and np.all(np.isfinite(i1))):
        raise NonFinite("cushion integral overflow")
    return i0.reshape(shape), i1.reshape(shape), f1[inv].reshape(shape)


def wealth_V1(sol: ConsumptionSolution, t, z):
    i0, _, f1 = cushion_integrals(sol, t, z)
    out = i0 + f1
    return float(out) if out.ndim == 0 else out


def _allocation(direction, cushion, minus_y, wealth, scale) -> Allocation:
    with np.errstate(divide="ignore", invalid="ignore"):
        multiple = np.where(cushion > 0, minus_y / np.where(cushion > 0, cushion, 1.0), np.nan)
        zero = np.abs(wealth) <= ZERO_WEALTH_RTOL * scale
        safe = np.where(zero, 1.0, wealth)
        weight = np.where(zero[..., None], np.nan, (minus_y / safe)[..., None] * direction)
    exposure = minus_y[..., None] * direction
    return Allocation(weight, exposure, wealth, multiple, zero)


def policy_pi1(sol: ConsumptionSolution, t, z) -> Allocation:
    """PPI allocation; the multiple is -Y/(V1 - F1) = 1/(1 - b(t_tilde))."""
    i0, i1, f1 = cushion_integrals(sol, t, z)
    v1 = i0 + f1
    scale = np.abs(i0) + np.abs(f1) + 1.0
    return _allocation(sol.market.direction, i0, -i1, v1, scale)


def t_tilde_target(sol: ConsumptionSolution, t, z):
    i0, i1, _ = cushion_integrals(sol, t, z)
    return 1.0 + i0 / i1


def t_tilde(sol: ConsumptionSolution, t: float, z: float) -> float:
    """Smallest s in [t, T] with b(s) equal to the mean-value target."""
    t = float(t)
    if t >= sol.T:
        raise Degenerate("t_tilde is undefined at or beyond the horizon")
    b = sol.prefs.b
    if is_constant(b, sol.T):
        return 0.5 * (t + sol.T)
    target = float(t_tilde_target(sol, t, z))
    grid = np.linspace(t, sol.T, T_TILDE_GRID)
    h = np.asarray(b(grid), float) - target
    hit = np.flatnonzero(h == 0.0)
    change = np.flatnonzero(np.sign(h[:-1]) * np.sign(h[1:]) < 0)
    first = min([*hit[:1].tolist(), *(change[:1] + 0.5).tolist()], default=None)
    if first is None:
        fine = np.linspace(t, sol.T, 64 * T_TILDE_GRID)
        return float(fine[np.argmin(np.abs(np.asarray(b(fine)) - target))])
    if first == int(first):
        return float(grid[int(first)])
    k = int(first - 0.5)
    return find_root(lambda s: float(b(s)) - target, grid[k], grid[k + 1],
                     RootSpec(1e-14, 1e-14, 200))


def value_V1(market, prefs, cashflows, v1: float, quad: QuadSpec = DEFAULT_QUAD,
             root: RootSpec = DEFAULT_ROOT) -> tuple[float, float, float]:
    """Value function, its derivative (the multiplier) and second derivative."""
    x = solve_log_lambda1(market, prefs, cashflows, v1, quad, root)
    s, w = rule(0.0, cashflows.T, quad)
    b = prefs.b(s)
    e = _exponent(b)
    kappa = market.r - 0.5 * e * market.gamma_sq
    base = e * ((prefs.beta - b * kappa) * s - np.log(prefs.a(s)))
    value = np.dot((1 - b) / b * np.exp(base + b * e * x), w)
    second = -1.0 / np.dot(np.exp(base - (b - 2) * e * x), w)
    return float(value), float(np.exp(x)), float(second)


def expected_consumption_part(sol: ConsumptionSolution, t):
    """g(t, t) E[Z(t)^e(t)]: the mean consumption cushion at t."""
    t = np.asarray(t, float)
    e = _exponent(sol.prefs.b(t))
    return g_kernel(sol, t, t) * kernel_power_moment(sol.market, e, t)
