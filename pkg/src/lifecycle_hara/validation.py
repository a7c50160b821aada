"""Invariant suite run by the ``validate`` command."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .consumption import _exponent, g_kernel, value_V1
from .market import kernel_power_moment
from .merge import MergedPolicy, policy_at, policy_constant_b, solve_split
from .preferences import ExpCurve, PreferenceModel, income_value
from .quadrature import rule
from .simulation import budget_mc, check_floors, record_from_brownian, verify_self_financing
from .terminal import value_V2, wealth_growth


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))


def perturb_lambda(policy: MergedPolicy, factor: float) -> MergedPolicy:
    """Copy of ``policy`` whose consumption multiplier is scaled by ``factor``."""
    cons = replace(policy.consumption, log_lambda1=policy.consumption.log_lambda1 + np.log(factor))
    return replace(policy, consumption=cons, lambda1_star=policy.lambda1_star * factor)


def budget_closed_form(policy: MergedPolicy) -> tuple[float, float]:
    """(E[int Z c* dt + Z(T) V*(T)], v0 + PV(income)) via kernel moments."""
    m, p, cf = policy.market, policy.prefs, policy.cashflows
    s, w = rule(0.0, cf.T, policy.quad)
    e = _exponent(p.b(s))
    g_tt = g_kernel(policy.consumption, s, s)
    cons = np.dot(g_tt * kernel_power_moment(m, 1.0 + e, s) + cf.cbar(s) * np.exp(-m.r * s), w)
    eh = 1.0 / (p.b_hat - 1.0)
    term = ((policy.v2_star - policy.terminal.f2_0) * float(wealth_growth(m, p, cf.T))
            * float(kernel_power_moment(m, 1.0 + eh, cf.T)) + cf.F * np.exp(-m.r * cf.T))
    return float(cons + term), policy.v0 + income_value(m, cf, policy.quad)


def constant_b_version(prefs: PreferenceModel) -> PreferenceModel:
    return PreferenceModel(prefs.beta, prefs.a_hat, prefs.b_hat, prefs.a, ExpCurve(prefs.b_hat, 0.0))


def _relative(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def special_case_gap(market, prefs, cashflows, v0, n_points: int, seed: int, quad) -> float:
    policy = solve_split(market, prefs, cashflows, v0, quad)
    rng = np.random.default_rng(seed)
    ts = rng.uniform(0.0, cashflows.T, n_points)
    zs = np.exp(rng.normal(-(market.r + 0.5 * market.gamma_sq) * ts, np.sqrt(market.gamma_sq * ts)))
    worst = 0.0
    for t, z in zip(ts, zs):
        g = policy_at(policy, t, z)
        c = policy_constant_b(market, prefs, cashflows, v0, t, z, quad)
        worst = max(worst, _relative(g.c_star, c.c_star), _relative(g.pi_star, c.pi_star),
                    _relative(g.V_star, c.V_star))
    return worst


def gradient_gap(fn: Callable[[float], tuple], levels, lower: float) -> float:
    """Worst relative gap between a central difference of the value and its stated slope.

    The step is scaled to the cushion above the feasibility bound ``lower``.
    """
    worst = 0.0
    for v in levels:
        h = 1e-5 * (v - lower)
        fd = (fn(v + h)[0] - fn(v - h)[0]) / (2 * h)
        worst = max(worst, abs(fd / fn(v)[1] - 1.0))
    return worst


def self_financing_errors(policy: MergedPolicy, record, dt: float) -> np.ndarray:
    """Per-path maximum tracking error of the Euler replication."""
    return np.array([verify_self_financing(policy, record.select(i), dt)
                     for i in range(record.n_paths)])


def run_validation(cfg, policy: MergedPolicy | None = None, paths: int | None = None,
                   steps: int | None = None, seed: int | None = None,
                   sf_paths: int = 16) -> list[Check]:
    m, p, cf, q = cfg.market, cfg.prefs, cfg.cashflows, cfg.quad
    policy = policy or solve_split(m, p, cf, cfg.v0, q, cfg.root)
    paths = paths or cfg.mc_paths
    steps = steps or cfg.mc_steps
    seed = cfg.seed if seed is None else seed
    out = []

    lhs, rhs = budget_closed_form(policy)
    rel = abs(lhs / rhs - 1.0)
    out.append(Check("budget_equality_closed_form", rel < 1e-8, f"relative gap {rel:.3e}"))

    b = budget_mc(policy, steps, paths, seed)
    out.append(Check("budget_equality_monte_carlo", b.passes(3.0),
                     f"estimate {b.estimate:.2f} vs {b.target:.2f}, z={b.z_score:.2f} ({paths} paths)"))

    fc = check_floors(policy, steps, min(paths, 2000), seed)
    out.append(Check("floor_preservation", fc.violations == 0,
                     f"min V*-F {fc.min_wealth_cushion:.2f}, min c*-cbar {fc.min_consumption_cushion:.2f}"))

    pc = constant_b_version(p)
    gap = special_case_gap(m, pc, cf, cfg.v0, 50, seed, q)
    out.append(Check("special_case_equivalence", gap < 1e-8, f"max relative gap {gap:.3e}"))

    f1_0 = policy.floors0()[0]
    f2_0 = policy.floors0()[1]
    span = cfg.v0 - f1_0 - f2_0
    lv1 = f1_0 + span * np.linspace(0.1, 0.9, 5)
    lv2 = f2_0 + span * np.linspace(0.1, 0.9, 5)
    g1 = gradient_gap(lambda v: value_V1(m, p, cf, v, q, cfg.root), lv1, f1_0)
    g2 = gradient_gap(lambda v: value_V2(m, p, cf, v), lv2, f2_0)
    out.append(Check("gradient_V1", g1 < 1e-6, f"max relative gap {g1:.3e}"))
    out.append(Check("gradient_V2", g2 < 1e-6, f"max relative gap {g2:.3e}"))

    sf_steps = int(round(cf.T * 252))
    from .simulation import _brownian
    t, w = _brownian(policy, sf_steps, range(sf_paths), seed)
    errs = self_financing_errors(policy, record_from_brownian(policy, t, w), cf.T / sf_steps)
    out.append(Check("self_financing", float(np.mean(errs)) < 5e-3,
                     f"per-path max tracking error mean {np.mean(errs):.3e}, "
                     f"worst {np.max(errs):.3e} at dt=1/252 over {sf_paths} paths"))
    return out
