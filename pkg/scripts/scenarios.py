"""Replay the policy along a rising, an expected and a falling stock path.

The rising and falling paths are deterministic exponentials, so results are reproducible.
"""
import argparse
from pathlib import Path

import numpy as np

from lifecycle_hara.config import load_config
from lifecycle_hara.merge import solve_split
from lifecycle_hara.simulation import replay_scenario, write_paths_csv


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/paper.json")
    ap.add_argument("--out", default="results")
    ap.add_argument("--drift", type=float, nargs=3, default=(0.09, 0.05, -0.02),
                    help="log-growth rates of the up, expected and down paths")
    args = ap.parse_args()
    cfg = load_config(args.config)
    policy = solve_split(cfg.market, cfg.prefs, cfg.cashflows, cfg.v0, cfg.quad)
    t = np.linspace(0.0, cfg.cashflows.T, 2081)
    p0 = cfg.market.p0[0]
    target = -25 * (t - 26) ** 2 + 37_732
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, g in zip(("up", "expected", "down"), args.drift):
        rec = replay_scenario(policy, t, p0 * np.exp(g * t))
        with open(out / f"scenario_{name}.csv", "w") as fh:
            write_paths_csv(rec, fh)
        gap = rec.c_star[0] - target
        below = t[gap < 0]
        first = f"{below[0]:.1f}" if below.size else "never"
        print(f"{name:<8} c*(T)={rec.c_star[0, -1]:10.1f} V*(T)={rec.V_star[0, -1]:12.1f} "
              f"min pi={np.min(rec.pi_star):.3f} max pi={np.max(rec.pi_star):.3f} "
              f"below consumption target from t={first}")


if __name__ == "__main__":
    main()
