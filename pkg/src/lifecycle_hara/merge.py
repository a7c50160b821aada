"""Optimal split of the endowment and the merged consumption/terminal policy."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .consumption import (ConsumptionSolution, _exponent, consumption_rate, cushion_integrals,
                          solve_log_lambda1, t_tilde)
from .errors import InfeasibleEndowment, InternalConsistency, NotConstantB, ZeroWealth
from .market import MarketParams
from .preferences import CashflowModel, PreferenceModel, floor_F1, floor_F2, is_constant
from .quadrature import DEFAULT_QUAD, DEFAULT_ROOT, QuadSpec, RootSpec, find_root, rule
from .terminal import (TerminalSolution, solve_terminal, terminal_cushion, terminal_rate,
                       wealth_growth)

log = logging.getLogger(__name__)

LAMBDA_CHECK_RTOL = 1e-6


def log_chi(market: MarketParams, prefs: PreferenceModel, t, horizon: float):
    t = np.asarray(t, float)
    b = prefs.b(t)
    bh = prefs.b_hat
    e = _exponent(b)
    k = prefs.beta - b * (market.r - 0.5 * e * market.gamma_sq)
    return (np.log1p(-b) + (1 - bh) * e * np.log1p(-bh) + e * np.log(prefs.a_hat / prefs.a(t))
            + e * (k * t - terminal_rate(market, prefs) * horizon))


def chi(market: MarketParams, prefs: PreferenceModel, t, horizon: float):
    return np.exp(log_chi(market, prefs, t, horizon))


@dataclass(frozen=True, eq=False)
class MergedPolicy:
    v0: float
    v1_star: float
    v2_star: float
    lambda1_star: float
    consumption: ConsumptionSolution
    terminal: TerminalSolution

    @property
    def market(self) -> MarketParams:
        return self.consumption.market

    @property
    def prefs(self) -> PreferenceModel:
        return self.consumption.prefs

    @property
    def cashflows(self) -> CashflowModel:
        return self.consumption.cashflows

    @property
    def quad(self) -> QuadSpec:
        return self.consumption.quad

    @property
    def T(self) -> float:
        return self.cashflows.T

    def floors0(self) -> tuple[float, float]:
        return (floor_F1(self.market, self.cashflows, 0.0, self.quad),
                floor_F2(self.market, self.cashflows, 0.0))


def split_function(market, prefs, cashflows, v0: float, quad: QuadSpec = DEFAULT_QUAD,
                   floors: tuple[float, float] | None = None):
    """Return f(x) whose unique root on (F1(0), v0 - F2(0)) is the optimal v1."""
    f1_0, f2_0 = floors if floors is not None else (
        floor_F1(market, cashflows, 0.0, quad), floor_F2(market, cashflows, 0.0))
    s, w = rule(0.0, cashflows.T, quad)
    lchi = log_chi(market, prefs, s, cashflows.T)
    power = (prefs.b_hat - 1.0) * _exponent(prefs.b(s))

    def f(x: float) -> float:
        rest = v0 - x - f2_0
        with np.errstate(over="ignore"):
            return x - float(np.dot(np.exp(lchi + power * np.log(rest)), w)) - f1_0

    return f


def solve_split(market, prefs, cashflows, v0: float, quad: QuadSpec = DEFAULT_QUAD,
                root: RootSpec = DEFAULT_ROOT, check: bool = True) -> MergedPolicy:
    prefs.check_domain(cashflows.T)
    f1_0 = floor_F1(market, cashflows, 0.0, quad)
    f2_0 = floor_F2(market, cashflows, 0.0)
    slack = v0 - f1_0 - f2_0
    if not slack > 0:
        raise InfeasibleEndowment(v0, f1_0 + f2_0)
    f = split_function(market, prefs, cashflows, v0, quad, (f1_0, f2_0))
    eps = 1e-9 * slack
    seen: list[tuple[float, float]] = []

    def traced(x):
        fx = f(x)
        seen.append((x, fx))
        return fx

    tight = RootSpec(root.abs_tol, min(root.rel_tol, 1e-13), root.max_iter)
    v1 = find_root(traced, f1_0 + eps, v0 - f2_0 - eps, tight)
    pts = sorted(seen)
    if any(b[1] < a[1] for a, b in zip(pts, pts[1:])):
        log.warning("split function evaluated as non-monotone near v1=%s", v1)
    v2 = v0 - v1
    term = solve_terminal(market, prefs, cashflows, v2)
    log_lam = float(np.log(term.lambda2))
    if check:
        x = solve_log_lambda1(market, prefs, cashflows, v1, quad, root, f1_0)
        if abs(np.expm1(x - log_lam)) > LAMBDA_CHECK_RTOL:
            raise InternalConsistency(
                f"lambda1(v1*)={np.exp(x)} differs from lambda2(v2*)={term.lambda2}")
    cons = ConsumptionSolution(market, prefs, cashflows, float(v1), log_lam, quad, root)
    return MergedPolicy(float(v0), float(v1), float(v2), term.lambda2, cons, term)


@dataclass(frozen=True)
class PolicyState:
    t: float
    z: float
    c_star: float
    pi_star: np.ndarray
    exposure: np.ndarray
    V_star: float
    V1: float
    V2: float
    F_t: float
    F1_t: float
    F2_t: float
    t_tilde: float
    multiple_consumption: float
    multiple_terminal: float
    zero_wealth: bool = False


@dataclass(frozen=True, eq=False)
class PolicyArrays:
    """Vectorised policy evaluation; asset quantities carry a trailing axis."""

    t: np.ndarray
    z: np.ndarray
    c_star: np.ndarray
    pi_star: np.ndarray
    exposure: np.ndarray
    V_star: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    F1_t: np.ndarray
    F2_t: np.ndarray
    multiple_consumption: np.ndarray
    zero_wealth: np.ndarray

    @property
    def F_t(self) -> np.ndarray:
        return self.F1_t + self.F2_t


def evaluate(policy: MergedPolicy, t, z) -> PolicyArrays:
    t, z = np.broadcast_arrays(np.asarray(t, float), np.asarray(z, float))
    i0, i1, f1 = cushion_integrals(policy.consumption, t, z)
    tc = terminal_cushion(policy.terminal, t, z)
    f2 = floor_F2(policy.market, policy.cashflows, t)
    v1 = i0 + f1
    v2 = tc + f2
    vstar = v1 + v2
    minus_y = -i1 + tc / (1.0 - policy.prefs.b_hat)
    exposure = minus_y[..., None] * policy.market.direction
    scale = np.abs(i0) + np.abs(tc) + np.abs(f1) + np.abs(f2) + 1.0
    zero = np.abs(vstar) <= 1e-12 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        pi = np.where(zero[..., None], np.nan, exposure / np.where(zero, 1.0, vstar)[..., None])
        mult = np.where(i0 > 0, -i1 / np.where(i0 > 0, i0, 1.0), np.nan)
    c = consumption_rate(policy.consumption, t, z)
    return PolicyArrays(t, z, c, pi, exposure, vstar, v1, v2, f1, np.broadcast_to(f2, t.shape),
                        mult, zero)


def policy_at(policy: MergedPolicy, t: float, z: float) -> PolicyState:
    a = evaluate(policy, float(t), float(z))
    tt = t_tilde(policy.consumption, t, z) if t < policy.T else float(policy.T)
    return PolicyState(float(t), float(z), float(a.c_star), a.pi_star.copy(), a.exposure.copy(),
                       float(a.V_star), float(a.V1), float(a.V2), float(a.F_t), float(a.F1_t),
                       float(a.F2_t), tt, float(a.multiple_consumption),
                       1.0 / (1.0 - policy.prefs.b_hat), bool(a.zero_wealth))


def policy_constant_b(market, prefs, cashflows, v0: float, t: float, z: float,
                      quad: QuadSpec = DEFAULT_QUAD) -> PolicyState:
    """Closed-form policy when b(t) equals b_hat throughout."""
    T = cashflows.T
    bh = prefs.b_hat
    grid_b = np.asarray(prefs.b(np.linspace(0.0, T, 2081)), float)
    if not is_constant(prefs.b, T) or np.max(np.abs(grid_b - bh)) > 1e-12 * max(1.0, abs(bh)):
        raise NotConstantB("b(t) must equal b_hat on [0, T]")
    e = 1.0 / (bh - 1.0)
    k = terminal_rate(market, prefs)

    def chi_c(s):
        return (prefs.a_hat / prefs.a(s)) ** e * np.exp(-e * k * (T - s))

    s0, w0 = rule(0.0, T, quad)
    st, wt = rule(t, T, quad)
    int0 = float(np.dot(chi_c(s0), w0))
    intt = float(np.dot(chi_c(st), wt))
    f1_0 = floor_F1(market, cashflows, 0.0, quad)
    f2_0 = floor_F2(market, cashflows, 0.0)
    if not v0 > f1_0 + f2_0:
        raise InfeasibleEndowment(v0, f1_0 + f2_0)
    f1 = floor_F1(market, cashflows, t, quad)
    f2 = floor_F2(market, cashflows, t)
    common = z ** e * (v0 - f1_0 - f2_0) * float(wealth_growth(market, prefs, t)) / (int0 + 1.0)
    v1 = common * intt + f1
    v2 = common + f2
    vstar = v1 + v2
    ft = f1 + f2
    zeta = float(chi_c(t)) / (intt + 1.0)
    c = zeta * (vstar - ft) + float(cashflows.cbar(t))
    exposure = (vstar - ft) / (1.0 - bh) * market.direction
    return PolicyState(float(t), float(z), float(c), exposure / vstar, exposure, float(vstar),
                       float(v1), float(v2), float(ft), float(f1), float(f2), 0.5 * (t + T),
                       1.0 / (1.0 - bh), 1.0 / (1.0 - bh))


@dataclass(frozen=True)
class Decomposition:
    """Two equivalent splits of the merged weight vector."""

    pi_star: np.ndarray
    ppi_total: np.ndarray        # PPI on V* with floor F(t), multiple 1/(1-b(t_tilde))
    ppi_terminal: np.ndarray     # correction: PPI on V2 with floor F2(t)
    cppi_total: np.ndarray       # CPPI on V* with floor F(t), multiple 1/(1-b_hat)
    ppi_consumption: np.ndarray  # correction: PPI on V1 with floor F1(t)
    b_t_tilde: float

    @property
    def two_ppi(self) -> np.ndarray:
        return self.ppi_total + self.ppi_terminal

    @property
    def cppi_plus_ppi(self) -> np.ndarray:
        return self.cppi_total + self.ppi_consumption


def decompose_policy(policy: MergedPolicy, t: float, z: float) -> Decomposition:
    st = policy_at(policy, t, z)
    if st.zero_wealth or abs(st.V1) <= 1e-12 * abs(st.V_star) or st.V2 == 0:
        raise ZeroWealth("decomposition needs nonzero V*, V1 and V2")
    d = policy.market.direction
    bh = policy.prefs.b_hat
    m1 = st.multiple_consumption
    bt = 1.0 - 1.0 / m1
    mh = 1.0 / (1.0 - bh)
    corr = (bh - bt) / ((1.0 - bh) * (1.0 - bt))
    vs = st.V_star
    return Decomposition(
        st.pi_star,
        m1 * (vs - st.F_t) / vs * d,
        corr * (st.V2 - st.F2_t) / vs * d,
        mh * (vs - st.F_t) / vs * d,
        -corr * (st.V1 - st.F1_t) / vs * d,
        bt,
    )
