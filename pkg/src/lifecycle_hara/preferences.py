"""Preference curves, utilities, Arrow-Pratt measures and liability floors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import FloorViolated, InvalidCurve
from .market import MarketParams
from .quadrature import DEFAULT_QUAD, QuadSpec, rule

DOMAIN_GRID = 2081


@runtime_checkable
class Curve(Protocol):
    def __call__(self, t): ...

    def to_spec(self) -> dict: ...


@dataclass(frozen=True)
class ExpCurve:
    """x0 * exp(lam * t)."""

    x0: float
    lam: float = 0.0

    def __call__(self, t):
        return self.x0 * np.exp(self.lam * np.asarray(t, dtype=float))

    def to_spec(self) -> dict:
        return {"type": "exp", "x0": self.x0, "lam": self.lam}


@dataclass(frozen=True)
class ScaledExpCurve:
    """Annual amount spread continuously over each year and growing at ``rate``.

    Evaluates ``rate / (e^rate - 1) * annual * e^(rate t)`` so that the integral
    over any year ``[k, k+1]`` equals ``annual * e^(rate k)``.
    """

    annual: float
    rate: float

    @property
    def scale(self) -> float:
        return 1.0 if self.rate == 0 else self.rate / np.expm1(self.rate)

    def __call__(self, t):
        return self.scale * self.annual * np.exp(self.rate * np.asarray(t, dtype=float))

    def year_total(self, k: float) -> float:
        return self.annual * float(np.exp(self.rate * k))

    def to_spec(self) -> dict:
        return {"type": "scaled_exp", "annual": self.annual, "rate": self.rate}


@dataclass(frozen=True, eq=False)
class TableCurve:
    """Piecewise-linear interpolation, flat beyond the table ends."""

    t: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise InvalidCurve("table curve needs matching 1-D t and v with >= 2 points")
        if np.any(np.diff(t) <= 0):
            raise InvalidCurve("table curve times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InvalidCurve("table curve values must be finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.t, self.v)

    def to_spec(self) -> dict:
        return {"type": "table", "t": self.t.tolist(), "v": self.v.tolist()}


def curve_from_spec(spec, path: str = "curve") -> Curve:
    """Build a curve from its JSON form; a bare number is a constant curve."""
    from .errors import ConfigError

    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return ExpCurve(float(spec), 0.0)
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(path, "expected a number or an object with a 'type' key")
    kind = spec["type"]
    try:
        if kind == "exp":
            return ExpCurve(float(spec["x0"]), float(spec.get("lam", 0.0)))
        if kind == "scaled_exp":
            return ScaledExpCurve(float(spec["annual"]), float(spec["rate"]))
        if kind == "table":
            return TableCurve(spec["t"], spec["v"])
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.type", f"unknown curve type {kind!r}")


def is_constant(curve: Curve, horizon: float, tol: float = 1e-12) -> bool:
    vals = np.asarray(curve(np.linspace(0.0, horizon, DOMAIN_GRID)), dtype=float)
    return float(np.ptp(vals)) <= tol * max(1.0, float(np.max(np.abs(vals))))


@dataclass(frozen=True)
class PreferenceModel:
    beta: float
    a_hat: float
    b_hat: float
    a: Curve
    b: Curve

    def __post_init__(self):
        if not self.beta >= 0:
            raise InvalidCurve(f"beta must be >= 0, got {self.beta}")
        if not self.a_hat > 0:
            raise InvalidCurve(f"a_hat must be > 0, got {self.a_hat}")
        if not (self.b_hat < 1 and self.b_hat != 0):
            raise InvalidCurve(f"b_hat must be < 1 and nonzero, got {self.b_hat}")
        if isinstance(self.b, ExpCurve) and not (self.b.x0 < 1 and self.b.x0 != 0):
            raise InvalidCurve(f"b0 must be < 1 and nonzero, got {self.b.x0}")

    def check_domain(self, horizon: float) -> "PreferenceModel":
        """Sample a and b on a dense grid over [0, horizon] and enforce their ranges."""
        grid = np.linspace(0.0, horizon, DOMAIN_GRID)
        a = np.asarray(self.a(grid), dtype=float)
        b = np.asarray(self.b(grid), dtype=float)
        if not (np.all(np.isfinite(a)) and np.all(a > 0)):
            raise InvalidCurve("a(t) must be finite and positive on [0, T]")
        if not (np.all(np.isfinite(b)) and np.all(b < 1)):
            raise InvalidCurve("b(t) must be finite and below 1 on [0, T]")
        if not (np.all(b < 0) or np.all(b > 0)):
            raise InvalidCurve("b(t) must keep one sign and avoid 0 on [0, T]")
        return self

    def to_dict(self) -> dict:
        return {"beta": self.beta, "a_hat": self.a_hat, "b_hat": self.b_hat,
                "a": self.a.to_spec(), "b": self.b.to_spec()}


@dataclass(frozen=True)
class CashflowModel:
    y: Curve
    cbar: Curve
    F: float
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidCurve(f"T must be positive, got {self.T}")
        if not self.F >= 0:
            raise InvalidCurve(f"F must be >= 0, got {self.F}")
        grid = np.linspace(0.0, self.T, DOMAIN_GRID)
        for name in ("y", "cbar"):
            vals = np.asarray(getattr(self, name)(grid), dtype=float)
            if not (np.all(np.isfinite(vals)) and np.all(vals >= 0)):
                raise InvalidCurve(f"{name}(t) must be finite and >= 0 on [0, T]")

    def to_dict(self) -> dict:
        return {"y": self.y.to_spec(), "cbar": self.cbar.to_spec(), "F": self.F, "T": self.T}


def floor_F1(market: MarketParams, cashflows: CashflowModel, t, quad: QuadSpec = DEFAULT_QUAD):
    """Discounted value at t of the consumption floor net of income over [t, T]."""
    t = np.asarray(t, dtype=float)
    s, w = rule(t, cashflows.T, quad)
    integrand = np.exp(-market.r * (s - t[..., None])) * (cashflows.cbar(s) - cashflows.y(s))
    out = np.sum(integrand * w, axis=-1)
    return float(out) if out.ndim == 0 else out


def floor_F2(market: MarketParams, cashflows: CashflowModel, t):
    out = np.exp(-market.r * (cashflows.T - np.asarray(t, dtype=float))) * cashflows.F
    return float(out) if np.ndim(out) == 0 else out


def floor_F(market: MarketParams, cashflows: CashflowModel, t, quad: QuadSpec = DEFAULT_QUAD):
    return floor_F1(market, cashflows, t, quad) + floor_F2(market, cashflows, t)


def income_value(market: MarketParams, cashflows: CashflowModel, quad: QuadSpec = DEFAULT_QUAD) -> float:
    """Present value at 0 of the income stream."""
    s, w = rule(0.0, cashflows.T, quad)
    return float(np.sum(np.exp(-market.r * s) * cashflows.y(s) * w))


def terminal_F_from_annuity(rate: float, years: float, annual_amount: float) -> float:
    """Value of a continuous annuity paying ``annual_amount`` per year for ``years``."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0.0:
        return annual_amount * years
    return annual_amount * float(-np.expm1(-years * rate)) / rate


def utility_consumption(prefs: PreferenceModel, cashflows: CashflowModel, t, c):
    t = np.asarray(t, dtype=float)
    cushion = np.asarray(c, dtype=float) - cashflows.cbar(t)
    if np.any(cushion <= 0):
        raise FloorViolated("consumption must exceed the consumption floor")
    b = prefs.b(t)
    return np.exp(-prefs.beta * t) * prefs.a(t) * (1 - b) / b * (cushion / (1 - b)) ** b


def utility_terminal(prefs: PreferenceModel, cashflows: CashflowModel, v):
    cushion = np.asarray(v, dtype=float) - cashflows.F
    if np.any(cushion <= 0):
        raise FloorViolated("terminal wealth must exceed the terminal floor")
    bh = prefs.b_hat
    return (np.exp(-prefs.beta * cashflows.T) * prefs.a_hat * (1 - bh) / bh
            * (cushion / (1 - bh)) ** bh)


def arrow_pratt(prefs: PreferenceModel, cashflows: CashflowModel, t, c, v):
    t = np.asarray(t, dtype=float)
    cc = np.asarray(c, dtype=float) - cashflows.cbar(t)
    vv = np.asarray(v, dtype=float) - cashflows.F
    if np.any(cc <= 0) or np.any(vv <= 0):
        raise FloorViolated("arrow_pratt needs c > cbar(t) and v > F")
    return (1 - prefs.b(t)) / cc, (1 - prefs.b_hat) / vv
