"""JSON run configuration with field-path error messages."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .calibration import HaraParams, ModelVariant, OptimizerSpec, PAPER_ESTIMATES
from .errors import ConfigError, LifecycleError
from .market import MarketParams
from .preferences import (CashflowModel, PreferenceModel, curve_from_spec, terminal_F_from_annuity)
from .quadrature import QuadSpec, RootSpec, integrate

DEFAULT_SEED = 20181017


def _get(d: dict, key: str, path: str, kind=float, default: Any = ...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}" if path else key, "missing")
        return default
    try:
        return kind(d[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key}" if path else key, f"invalid value {d[key]!r} ({exc})") from None


def _section(d: dict, key: str, required: bool = True) -> dict:
    val = d.get(key, None if required else {})
    if not isinstance(val, dict):
        raise ConfigError(key, "expected an object" if val is not None else "missing")
    return val


def _terminal_floor(spec, r: float, y, T: float, quad: QuadSpec) -> float:
    """F as a number, an explicit annuity, or a pension tied to final-year income."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec)
    if not isinstance(spec, dict):
        raise ConfigError("cashflows.F", "expected a number or an object")
    kind = spec.get("type")
    p = "cashflows.F"
    if kind == "annuity":
        return terminal_F_from_annuity(_get(spec, "rate", p, default=r), _get(spec, "years", p),
                                       _get(spec, "annual", p))
    if kind == "pension":
        # replacement share of income earned in the final year, split between two recipients
        final = integrate(y, T - 1.0, T, quad)
        amount = _get(spec, "replacement", p) * final / _get(spec, "split", p, default=1.0)
        return terminal_F_from_annuity(_get(spec, "rate", p, default=r), _get(spec, "years", p), amount)
    raise ConfigError(f"{p}.type", f"unknown terminal floor type {kind!r}")


@dataclass(frozen=True, eq=False)
class RunConfig:
    market: MarketParams
    prefs: PreferenceModel
    cashflows: CashflowModel
    v0: float
    quad: QuadSpec = QuadSpec()
    root: RootSpec = RootSpec()
    mc_paths: int = 10_000
    mc_steps: int = 2080
    sim_paths: int = 20
    seed: int = DEFAULT_SEED
    out: str = "out"
    variant: ModelVariant = ModelVariant.FULL
    grid_points: int = 2080
    optimizer: OptimizerSpec = OptimizerSpec()
    init: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()

    def init_params(self, variant: ModelVariant) -> HaraParams:
        return self.init.get(variant, PAPER_ESTIMATES[variant])


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "expected a JSON object")
    try:
        ms = _section(raw, "market")
        mu = ms.get("mu")
        sigma = ms.get("sigma")
        if mu is None:
            raise ConfigError("market.mu", "missing")
        if sigma is None:
            raise ConfigError("market.sigma", "missing")
        mu = np.atleast_1d(np.asarray(mu, float))
        sigma = np.asarray(sigma, float)
        if sigma.ndim == 0:
            sigma = sigma.reshape(1, 1)
        elif sigma.ndim == 1:
            sigma = np.diag(sigma)
        p0 = np.atleast_1d(np.asarray(ms.get("p0", [100.0] * mu.size), float))
        market = MarketParams(_get(ms, "r", "market"), mu, sigma, p0)

        qs = _section(raw, "quad", required=False)
        quad = QuadSpec(_get(qs, "nodes", "quad", int, 16), _get(qs, "panels", "quad", int, 16))
        rs = _section(raw, "root", required=False)
        root = RootSpec(_get(rs, "abs_tol", "root", float, 1e-12), _get(rs, "rel_tol", "root", float, 1e-10),
                        _get(rs, "max_iter", "root", int, 200))

        cs = _section(raw, "cashflows")
        T = _get(cs, "T", "cashflows")
        if "y" not in cs:
            raise ConfigError("cashflows.y", "missing")
        if "cbar" not in cs:
            raise ConfigError("cashflows.cbar", "missing")
        y = curve_from_spec(cs["y"], "cashflows.y")
        cbar = curve_from_spec(cs["cbar"], "cashflows.cbar")
        F = _terminal_floor(cs.get("F", 0.0), market.r, y, T, quad)
        cashflows = CashflowModel(y, cbar, F, T)

        ps = _section(raw, "preferences")
        for key in ("a", "b"):
            if key not in ps:
                raise ConfigError(f"preferences.{key}", "missing")
        prefs = PreferenceModel(_get(ps, "beta", "preferences"), _get(ps, "a_hat", "preferences"),
                                _get(ps, "b_hat", "preferences"),
                                curve_from_spec(ps["a"], "preferences.a"),
                                curve_from_spec(ps["b"], "preferences.b"))
        prefs.check_domain(T)

        mc = _section(raw, "mc", required=False)
        sim = _section(raw, "simulate", required=False)
        cal = _section(raw, "calibration", required=False)
        variant_name = cal.get("variant", "FULL")
        try:
            variant = ModelVariant.parse(str(variant_name))
        except ValueError as exc:
            raise ConfigError("calibration.variant", str(exc)) from None
        init = {}
        for name, spec in (cal.get("init") or {}).items():
            try:
                init[ModelVariant.parse(name)] = HaraParams(**{k: float(v) for k, v in spec.items()})
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"calibration.init.{name}", str(exc)) from None
        optimizer = OptimizerSpec(
            n_starts=_get(cal, "n_starts", "calibration", int, 8),
            seed=_get(cal, "seed", "calibration", int, OptimizerSpec.seed),
            spread=_get(cal, "spread", "calibration", float, 0.5),
            simplex_maxfev=_get(cal, "simplex_maxfev", "calibration", int, OptimizerSpec.simplex_maxfev),
            lsq_max_nfev=_get(cal, "lsq_max_nfev", "calibration", int, OptimizerSpec.lsq_max_nfev),
            positive_b=bool(cal.get("positive_b", False)),
        )
        v0 = _get(raw, "v0", "")
        return RunConfig(
            market, prefs, cashflows, v0, quad, root,
            mc_paths=_get(mc, "paths", "mc", int, 10_000),
            mc_steps=_get(mc, "steps", "mc", int, 2080),
            sim_paths=_get(sim, "paths", "simulate", int, 20),
            seed=_get(raw, "seed", "", int, DEFAULT_SEED),
            out=str(raw.get("out", "out")),
            variant=variant,
            grid_points=_get(cal, "grid_points", "calibration", int, 2080),
            optimizer=optimizer,
            init=init,
            raw=raw,
        )
    except ConfigError:
        raise
    except LifecycleError as exc:
        raise ConfigError(type(exc).__name__, str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw)


def paper_config_dict() -> dict:
    """Market, cashflows and the fitted full-model preferences of the reference setup."""
    full = PAPER_ESTIMATES[ModelVariant.FULL]
    return {
        "market": {"r": 0.005, "mu": [0.05], "sigma": [[0.2]], "p0": [100.0]},
        "preferences": {
            "beta": 0.03, "a_hat": 1.0, "b_hat": full.b_hat,
            "a": {"type": "exp", "x0": full.a0, "lam": full.lam_a},
            "b": {"type": "exp", "x0": full.b0, "lam": full.lam_b},
        },
        "cashflows": {
            "T": 40.0,
            "y": {"type": "scaled_exp", "annual": 26200.0, "rate": 0.0207},
            "cbar": {"type": "scaled_exp", "annual": 14880.0, "rate": 0.0193},
            "F": {"type": "pension", "replacement": 0.75, "split": 2.0, "years": 20.8},
        },
        "v0": 250000.0,
        "quad": {"nodes": 16, "panels": 16},
        "root": {"abs_tol": 1e-12, "rel_tol": 1e-10, "max_iter": 200},
        "mc": {"paths": 10000, "steps": 2080},
        "simulate": {"paths": 20},
        "calibration": {"variant": "FULL", "grid_points": 2080, "n_starts": 8},
        "seed": DEFAULT_SEED,
        "out": "out",
    }
