"""Expected consumption, wealth and allocation under the published FULL parameters.

Writes a weekly CSV and prints a yearly summary next to the calibration targets.
"""
import argparse
from pathlib import Path

import numpy as np

from lifecycle_hara.calibration import PAPER_ESTIMATES, ModelVariant, target_curves_paper
from lifecycle_hara.config import load_config
from lifecycle_hara.market import time_grid
from lifecycle_hara.merge import solve_split
from lifecycle_hara.simulation import curves_columns, expected_curves, write_columns_csv


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/paper.json")
    ap.add_argument("--variant", default="FULL")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = load_config(args.config)
    v = ModelVariant.parse(args.variant)
    prefs = PAPER_ESTIMATES[v].pinned_for(v).prefs(cfg.prefs.beta, cfg.prefs.a_hat)
    policy = solve_split(cfg.market, prefs, cfg.cashflows, cfg.v0, cfg.quad)
    t = time_grid(cfg.cashflows.T, 2080)
    curves = expected_curves(policy, t)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"expected_curves_{v.value}.csv", "w") as fh:
        write_columns_csv(curves_columns(curves), fh)
    tgt = target_curves_paper()
    print(f"v1*={policy.v1_star:.2f} v2*={policy.v2_star:.2f} lambda*={policy.lambda1_star:.4e}")
    print(f"{'t':>4} {'E[c*]':>10} {'target':>10} {'alloc':>7} {'target':>7} {'E[V*]':>12}")
    for k in range(0, 2081, 104):
        print(f"{t[k]:4.0f} {curves.consumption[k]:10.1f} {tgt.consumption(t[k]):10.1f} "
              f"{curves.allocation[k, 0]:7.3f} {tgt.allocation(t[k]):7.3f} {curves.wealth[k]:12.1f}")


if __name__ == "__main__":
    main()
