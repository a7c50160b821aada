"""Command-line entry point: solve, simulate, calibrate, validate."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationTarget, ModelVariant, Objective, fit, target_curves_paper
from .config import RunConfig, load_config
from .consumption import value_V1
from .errors import ConfigError, InfeasibleEndowment, LifecycleError, ScenarioError
from .market import time_grid
from .merge import solve_split
from .preferences import TableCurve
from .simulation import (curves_columns, expected_curves, iter_policy_paths, replay_scenario,
                         write_columns_csv, write_paths_csv)
from .terminal import value_V2
from .validation import perturb_lambda, run_validation

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SCENARIO = 0, 1, 2, 3


def _header(cfg: RunConfig, seed: int) -> str:
    return f"# config_sha256={cfg.sha256} seed={seed}\n"


def _meta(cfg: RunConfig, seed: int) -> dict:
    return {"config_sha256": cfg.sha256, "seed": seed, "version": __version__}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy(cfg: RunConfig):
    return solve_split(cfg.market, cfg.prefs, cfg.cashflows, cfg.v0, cfg.quad, cfg.root)


def cmd_solve(cfg: RunConfig) -> int:
    policy = _policy(cfg)
    f1_0, f2_0 = policy.floors0()
    val1 = value_V1(cfg.market, cfg.prefs, cfg.cashflows, policy.v1_star, cfg.quad, cfg.root)
    val2 = value_V2(cfg.market, cfg.prefs, cfg.cashflows, policy.v2_star)
    summary = {
        **_meta(cfg, cfg.seed),
        "v0": cfg.v0, "v1_star": policy.v1_star, "v2_star": policy.v2_star,
        "lambda1_star": policy.lambda1_star,
        "F": cfg.cashflows.F, "F_0": f1_0 + f2_0, "F1_0": f1_0, "F2_0": f2_0,
        "value_V1": {"value": val1[0], "first_deriv": val1[1], "second_deriv": val1[2]},
        "value_V2": {"value": val2[0], "first_deriv": val2[1], "second_deriv": val2[2]},
        "value_total": val1[0] + val2[0],
    }
    out = _outdir(cfg)
    _write_json(out / "solve.json", summary)
    curves = expected_curves(policy, time_grid(cfg.cashflows.T, cfg.mc_steps))
    with open(out / "expected_curves.csv", "w") as fh:
        write_columns_csv(curves_columns(curves), fh, _header(cfg, cfg.seed))
    print(f"v1*={policy.v1_star:.2f} v2*={policy.v2_star:.2f} F(0)={f1_0 + f2_0:.2f} "
          f"F2(0)={f2_0:.2f} -> {out}")
    return EXIT_OK


def read_scenario(path: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    if not rows or [c.strip() for c in rows[0]] != ["t", "price"]:
        raise ScenarioError("scenario CSV must start with the header 't,price'")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise ScenarioError(f"bad scenario row: {exc}") from None
    if data.shape[0] < 2:
        raise ScenarioError("scenario needs at least two rows")
    t, price = data[:, 0], data[:, 1]
    if abs(t[0]) > 1e-12 or np.any(np.diff(t) <= 0):
        raise ScenarioError("scenario times must start at 0 and increase strictly")
    if np.any(price <= 0) or not np.all(np.isfinite(price)):
        raise ScenarioError("scenario prices must be positive and finite")
    return t, price


def cmd_simulate(cfg: RunConfig, n_paths: int, steps: int, seed: int, scenario: str | None) -> int:
    policy = _policy(cfg)
    out = _outdir(cfg)
    if scenario:
        t, price = read_scenario(scenario)
        if t[-1] > cfg.cashflows.T + 1e-12:
            raise ScenarioError("scenario extends beyond the horizon")
        if cfg.market.n_assets != 1:
            raise ScenarioError("scenario replay needs a single risky asset")
        if abs(price[0] / cfg.market.p0[0] - 1.0) > 1e-9:
            raise ScenarioError(f"scenario must start at the initial price {cfg.market.p0[0]}")
        rec = replay_scenario(policy, t, price)
        with open(out / "scenario.csv", "w") as fh:
            write_paths_csv(rec, fh, _header(cfg, seed))
        print(f"replayed {t.size} dates -> {out / 'scenario.csv'}")
        return EXIT_OK
    c_all, v_all, pi_all, viol = [], [], [], 0
    with open(out / "paths.csv", "w") as fh:
        fh.write(_header(cfg, seed))
        for k, rec in enumerate(iter_policy_paths(policy, steps, n_paths, seed, chunk=200)):
            write_paths_csv(rec, fh, column_names=(k == 0))
            c_all.append(rec.c_star)
            v_all.append(rec.V_star)
            pi_all.append(rec.pi_star[..., 0])
            viol += int(np.sum(rec.V_star <= rec.F_t))
            t = rec.t
    qs = (0.05, 0.25, 0.5, 0.75, 0.95)
    cols = {"t": t}
    for name, arrs in (("c_star", c_all), ("V_star", v_all), ("pi_1", pi_all)):
        stack = np.concatenate(arrs)
        for q in qs:
            cols[f"{name}_q{int(round(q * 100)):02d}"] = np.nanquantile(stack, q, axis=0)
    with open(out / "summary_quantiles.csv", "w") as fh:
        write_columns_csv(cols, fh, _header(cfg, seed))
    print(f"simulated {n_paths} paths x {steps} steps, floor violations: {viol} -> {out}")
    return EXIT_OK


def read_target(path: str, horizon: float) -> CalibrationTarget:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    head = [c.strip() for c in rows[0]]
    if head != ["t", "consumption", "allocation"]:
        raise ConfigError("--target", "CSV header must be 't,consumption,allocation'")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return CalibrationTarget(TableCurve(data[:, 0], data[:, 1]), TableCurve(data[:, 0], data[:, 2]),
                             data[:, 0])


def cmd_calibrate(cfg: RunConfig, variant: ModelVariant, target_file: str | None) -> int:
    target = (read_target(target_file, cfg.cashflows.T) if target_file
              else target_curves_paper(cfg.grid_points, cfg.cashflows.T))
    init = cfg.init_params(variant).prefs(cfg.prefs.beta, cfg.prefs.a_hat)
    result = fit(variant, target, cfg.market, init, cfg.cashflows, cfg.v0, cfg.optimizer, cfg.quad)
    out = _outdir(cfg)
    stem = f"calibration_{variant.value}"
    payload = {**_meta(cfg, cfg.optimizer.seed), **result.to_dict(),
               "target": "file:" + Path(target_file).name if target_file else "default"}
    _write_json(out / f"{stem}.json", payload)
    obj = Objective(variant, target, cfg.market, cfg.cashflows, cfg.v0, cfg.prefs.beta,
                    cfg.prefs.a_hat, cfg.quad)
    res = obj.residuals(result.params)
    m = target.grid.size
    ct, pt = target.values()
    cols = {"t": target.grid, "c_target": ct, "c_fit": ct * (1 + res[:m]),
            "pi_target": pt, "pi_fit": pt * (1 + res[m:])}
    with open(out / f"{stem}_curves.csv", "w") as fh:
        write_columns_csv(cols, fh, _header(cfg, cfg.optimizer.seed))
    flag = "" if result.converged else " (not converged)"
    print(f"{variant.value}: ssrd={result.ssrd:.4f}{flag} -> {out / (stem + '.json')}")
    return EXIT_OK


def cmd_validate(cfg: RunConfig, paths: int, steps: int, seed: int,
                 lambda_factor: float = 1.0) -> int:
    policy = _policy(cfg)
    if lambda_factor != 1.0:
        policy = perturb_lambda(policy, lambda_factor)
    checks = run_validation(cfg, policy, paths, steps, seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    out = _outdir(cfg)
    _write_json(out / "validate.json", {**_meta(cfg, seed), "lambda_factor": lambda_factor,
                                        "checks": [c.__dict__ for c in checks]})
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifecycle-hara", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("solve", help="optimal split, value functions and expected curves"))
    p = sub.add_parser("simulate", help="Monte Carlo paths or replay of a price scenario")
    common(p)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--scenario", help="CSV with columns t,price")
    p = sub.add_parser("calibrate", help="fit preference curves to target curves")
    common(p)
    p.add_argument("--variant", help="FULL, A_CONST, B_CONST, BOTH_CONST or CRRA_FULL")
    p.add_argument("--target", help="CSV with columns t,consumption,allocation")
    p = sub.add_parser("validate", help="run the invariant suite")
    common(p)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--perturb-lambda", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out:
            cfg = replace(cfg, out=args.out)
        seed = cfg.seed if args.seed is None else args.seed
        if args.command == "solve":
            return cmd_solve(replace(cfg, seed=seed))
        if args.command == "simulate":
            return cmd_simulate(cfg, args.paths or cfg.sim_paths, args.steps or cfg.mc_steps,
                                seed, args.scenario)
        if args.command == "calibrate":
            variant = ModelVariant.parse(args.variant) if args.variant else cfg.variant
            if args.seed is not None:
                cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=args.seed))
            return cmd_calibrate(cfg, variant, args.target)
        return cmd_validate(cfg, args.paths or cfg.mc_paths, args.steps or cfg.mc_steps, seed,
                            args.perturb_lambda)
    except InfeasibleEndowment as exc:
        print(f"error: {exc} (violated bound v0 > F(0) = {exc.bound:.6f})", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"error: scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ConfigError, ValueError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LifecycleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
