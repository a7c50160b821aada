"""Least-squares calibration of the preference curves to target glide paths."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.stats import qmc

from .errors import InfeasibleParams, LifecycleError
from .market import MarketParams
from .merge import solve_split
from .preferences import (CashflowModel, Curve, ExpCurve, PreferenceModel, floor_F1, floor_F2)
from .quadrature import DEFAULT_QUAD, QuadSpec
from .simulation import expected_curves

log = logging.getLogger(__name__)

PARAM_NAMES = ("b_hat", "a0", "lam_a", "b0", "lam_b")
PENALTY = 1e3


class ModelVariant(str, enum.Enum):
    FULL = "FULL"
    A_CONST = "A_CONST"
    B_CONST = "B_CONST"
    BOTH_CONST = "BOTH_CONST"
    CRRA_FULL = "CRRA_FULL"

    @classmethod
    def parse(cls, name: str) -> "ModelVariant":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; choose from {[v.value for v in cls]}") from None

    @property
    def pinned(self) -> frozenset[str]:
        return {
            ModelVariant.A_CONST: frozenset({"lam_a"}),
            ModelVariant.B_CONST: frozenset({"lam_b"}),
            ModelVariant.BOTH_CONST: frozenset({"lam_a", "lam_b"}),
        }.get(self, frozenset())

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(n for n in PARAM_NAMES if n not in self.pinned)


@dataclass(frozen=True)
class HaraParams:
    b_hat: float
    a0: float
    lam_a: float
    b0: float
    lam_b: float

    @classmethod
    def from_prefs(cls, prefs: PreferenceModel) -> "HaraParams":
        a, b = prefs.a, prefs.b
        if not (isinstance(a, ExpCurve) and isinstance(b, ExpCurve)):
            raise TypeError("calibration needs exponential a(t) and b(t)")
        return cls(prefs.b_hat, a.x0, a.lam, b.x0, b.lam)

    def pinned_for(self, variant: ModelVariant) -> "HaraParams":
        return replace(self, **{n: 0.0 for n in variant.pinned})

    def prefs(self, beta: float, a_hat: float) -> PreferenceModel:
        return PreferenceModel(beta, a_hat, self.b_hat, ExpCurve(self.a0, self.lam_a),
                               ExpCurve(self.b0, self.lam_b))

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}


# Published estimates and objective values, used as optimiser centres and for comparison.
PAPER_ESTIMATES = {
    ModelVariant.FULL: HaraParams(-0.9849, 5.2864e7, -0.6673, -4.9731, -0.0340),
    ModelVariant.A_CONST: HaraParams(-0.8325, 0.7997e7, 0.0, -4.0243, 0.0012),
    ModelVariant.B_CONST: HaraParams(-0.8344, 1.8187e7, -0.0363, -4.1441, 0.0),
    ModelVariant.BOTH_CONST: HaraParams(-0.8247, 0.3425e7, 0.0, -3.9697, 0.0),
    ModelVariant.CRRA_FULL: HaraParams(-4.4867, 0.6238e7, -0.8689, -9.7397, -0.0192),
}
PAPER_SSRD = {
    ModelVariant.FULL: 6.0425,
    ModelVariant.A_CONST: 31.3157,
    ModelVariant.B_CONST: 31.1801,
    ModelVariant.BOTH_CONST: 33.5350,
    ModelVariant.CRRA_FULL: 125.3497,
}


@dataclass(frozen=True, eq=False)
class CalibrationTarget:
    consumption: Curve
    allocation: Curve
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, float)
        object.__setattr__(self, "grid", grid)
        c, p = self.values()
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(p))):
            raise ValueError("target curves must be finite on the grid")
        if np.any(c == 0):
            raise ValueError("consumption target must be nonzero on the grid")
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("allocation target must lie in (0, 1) on the grid")

    def values(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.consumption(self.grid), float),
                np.asarray(self.allocation(self.grid), float))


@dataclass(frozen=True)
class HumpConsumption:
    """peak - curvature (t - t_peak)^2."""

    peak: float = 37_732.0
    t_peak: float = 26.0
    curvature: float = 25.0

    def __call__(self, t):
        return self.peak - self.curvature * (np.asarray(t, float) - self.t_peak) ** 2

    def to_spec(self) -> dict:
        return {"type": "hump", "peak": self.peak, "t_peak": self.t_peak, "curvature": self.curvature}


@dataclass(frozen=True)
class AgeRuleAllocation:
    """(100 - age) percent in equities, with age = start_age + t."""

    start_age: float = 25.0

    def __call__(self, t):
        return (100.0 - (np.asarray(t, float) + self.start_age)) / 100.0

    def to_spec(self) -> dict:
        return {"type": "age_rule", "start_age": self.start_age}


def weekly_grid(horizon: float = 40.0, points: int = 2080) -> np.ndarray:
    """t_k = k T / M for k = 0..M-1."""
    return np.arange(points) * (horizon / points)


def target_curves_paper(points: int = 2080, horizon: float = 40.0) -> CalibrationTarget:
    return CalibrationTarget(HumpConsumption(), AgeRuleAllocation(), weekly_grid(horizon, points))


def variant_cashflows(variant: ModelVariant, cashflows: CashflowModel) -> CashflowModel:
    if variant is ModelVariant.CRRA_FULL:
        return CashflowModel(cashflows.y, ExpCurve(0.0, 0.0), 0.0, cashflows.T)
    return cashflows


class Objective:
    """Residual map for one variant with grid-dependent floors cached."""

    def __init__(self, variant: ModelVariant, target: CalibrationTarget, market: MarketParams,
                 cashflows: CashflowModel, v0: float, beta: float = 0.03, a_hat: float = 1.0,
                 quad: QuadSpec = DEFAULT_QUAD):
        self.variant = ModelVariant(variant)
        self.target = target
        self.market = market
        self.cashflows = variant_cashflows(self.variant, cashflows)
        self.v0 = float(v0)
        self.beta = beta
        self.a_hat = a_hat
        self.quad = quad
        self.c_target, self.pi_target = target.values()
        self.f1_grid = np.atleast_1d(floor_F1(market, self.cashflows, target.grid, quad))
        self.floors0 = (floor_F1(market, self.cashflows, 0.0, quad),
                        floor_F2(market, self.cashflows, 0.0))
        self.evaluations = 0

    @property
    def size(self) -> int:
        return 2 * self.target.grid.size

    def residuals(self, params: HaraParams) -> np.ndarray:
        self.evaluations += 1
        params = params.pinned_for(self.variant)
        if self.v0 <= sum(self.floors0):
            raise InfeasibleParams(f"v0={self.v0} does not exceed F(0)={sum(self.floors0)}")
        try:
            prefs = params.prefs(self.beta, self.a_hat)
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                policy = solve_split(self.market, prefs, self.cashflows, self.v0, self.quad,
                                     check=False)
                curves = expected_curves(policy, self.target.grid, self.f1_grid)
                alloc = curves.allocation[:, 0]
        except (LifecycleError, FloatingPointError, ValueError) as exc:
            raise InfeasibleParams(str(exc)) from exc
        res = np.concatenate([(curves.consumption - self.c_target) / self.c_target,
                              (alloc - self.pi_target) / self.pi_target])
        if not np.all(np.isfinite(res)):
            raise InfeasibleParams("non-finite residuals")
        return res

    def ssrd(self, params: HaraParams) -> float:
        return float(np.sum(self.residuals(params) ** 2))

    def blocks(self, params: HaraParams) -> tuple[float, float]:
        r = self.residuals(params)
        m = self.target.grid.size
        return float(np.sum(r[:m] ** 2)), float(np.sum(r[m:] ** 2))

    # optimiser coordinates ---------------------------------------------------
    def encode(self, params: HaraParams) -> np.ndarray:
        raw = {"b_hat": np.log(1.0 - params.b_hat), "a0": np.log(params.a0), "lam_a": params.lam_a,
               "b0": np.log(abs(params.b0)), "lam_b": params.lam_b}
        return np.array([raw[n] for n in self.variant.free])

    def decode(self, theta, positive_b: bool = False) -> HaraParams:
        vals = dict(zip(self.variant.free, np.asarray(theta, float)))
        b0 = np.exp(vals["b0"]) * (1.0 if positive_b else -1.0)
        return HaraParams(1.0 - np.exp(vals["b_hat"]), np.exp(vals["a0"]), vals.get("lam_a", 0.0),
                          b0, vals.get("lam_b", 0.0))


def residuals(variant, params: HaraParams, target: CalibrationTarget, market: MarketParams,
              cashflows: CashflowModel, v0: float, beta: float = 0.03, a_hat: float = 1.0,
              quad: QuadSpec = DEFAULT_QUAD) -> np.ndarray:
    return Objective(variant, target, market, cashflows, v0, beta, a_hat, quad).residuals(params)


@dataclass(frozen=True)
class OptimizerSpec:
    n_starts: int = 8
    seed: int = 20_181_017
    spread: float = 0.5
    simplex_maxfev: int = 100
    lsq_max_nfev: int = 200
    tol: float = 1e-10
    positive_b: bool = False


@dataclass(frozen=True)
class CalibrationResult:
    variant: ModelVariant
    params: HaraParams
    ssrd: float
    ssrd_consumption: float
    ssrd_allocation: float
    iterations: int
    converged: bool
    starts: tuple = field(default_factory=tuple)

    @property
    def b_hat(self):
        return self.params.b_hat

    @property
    def a0(self):
        return self.params.a0

    @property
    def lam_a(self):
        return self.params.lam_a

    @property
    def b0(self):
        return self.params.b0

    @property
    def lam_b(self):
        return self.params.lam_b

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, **self.params.as_dict(), "ssrd": self.ssrd,
                "ssrd_consumption": self.ssrd_consumption, "ssrd_allocation": self.ssrd_allocation,
                "iterations": self.iterations, "converged": self.converged,
                "starts": [dict(s) for s in self.starts]}


def start_points(centre: HaraParams, variant: ModelVariant, spec: OptimizerSpec) -> list[HaraParams]:
    """The centre itself followed by Latin-hypercube draws of +-spread around it."""
    pts = [centre.pinned_for(variant)]
    extra = spec.n_starts - 1
    if extra <= 0:
        return pts
    free = variant.free
    lhs = qmc.LatinHypercube(d=len(free), seed=spec.seed).random(extra)
    scale = 1.0 - spec.spread + 2.0 * spec.spread * lhs
    for row in scale:
        vals = centre.as_dict()
        for name, s in zip(free, row):
            vals[name] = vals[name] * s
        pts.append(HaraParams(**vals).pinned_for(variant))
    return pts


def _local_fit(obj: Objective, start: HaraParams, spec: OptimizerSpec):
    m = obj.size

    def res(theta):
        try:
            return obj.residuals(obj.decode(theta, spec.positive_b))
        except InfeasibleParams:
            return np.full(m, PENALTY / np.sqrt(m))

    def sse(theta):
        r = res(theta)
        return float(r @ r)

    theta = obj.encode(start)
    nfev = 0
    if spec.simplex_maxfev > 0:
        nm = minimize(sse, theta, method="Nelder-Mead",
                      options={"maxfev": spec.simplex_maxfev, "xatol": 1e-8, "fatol": 1e-10})
        theta, nfev = nm.x, nfev + nm.nfev
    ls = least_squares(res, theta, method="trf", x_scale="jac", ftol=spec.tol, xtol=spec.tol,
                       gtol=spec.tol, max_nfev=spec.lsq_max_nfev)
    nfev += ls.nfev
    return obj.decode(ls.x, spec.positive_b), float(2.0 * ls.cost), nfev, ls.status > 0


def fit(variant, target: CalibrationTarget, market: MarketParams, prefs_init: PreferenceModel,
        cashflows: CashflowModel, v0: float, optimizer_spec: OptimizerSpec = OptimizerSpec(),
        quad: QuadSpec = DEFAULT_QUAD) -> CalibrationResult:
    """Multi-start simplex + Gauss-Newton fit; returns the best local optimum found."""
    variant = ModelVariant(variant)
    obj = Objective(variant, target, market, cashflows, v0, prefs_init.beta, prefs_init.a_hat, quad)
    centre = HaraParams.from_prefs(prefs_init)
    best = None
    total = 0
    history = []
    for k, start in enumerate(start_points(centre, variant, optimizer_spec)):
        params, value, nfev, ok = _local_fit(obj, start, optimizer_spec)
        total += nfev
        history.append((("start", k), ("ssrd", value), ("converged", ok)))
        log.info("%s start %d: ssrd=%.6f nfev=%d", variant.value, k, value, nfev)
        if best is None or value < best[1]:
            best = (params, value, ok)
    params, value, ok = best
    params = params.pinned_for(variant)
    c_part, p_part = obj.blocks(params)
    return CalibrationResult(variant, params, c_part + p_part, c_part, p_part, total, ok,
                             tuple(history))
