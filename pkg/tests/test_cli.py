import json
from pathlib import Path

import numpy as np
import pytest

from lifecycle_hara.cli import main
from lifecycle_hara.config import load_config

ROOT = Path(__file__).resolve().parents[1]
CASE = str(ROOT / "configs" / "paper.json")
CONST_B = str(ROOT / "configs" / "constant_b.json")


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True, skip_header=1)


def run(*args):
    return main([str(a) for a in args])


def edited_config(tmp_path, **changes):
    raw = json.loads(Path(CASE).read_text())
    for dotted, value in changes.items():
        node = raw
        *head, last = dotted.split("__")
        for key in head:
            node = node[key]
        node[last] = value
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(raw))
    return path


def test_solve_outputs_and_determinism(tmp_path):
    assert run("solve", "--config", CASE, "--out", tmp_path / "a") == 0
    assert run("solve", "--config", CASE, "--out", tmp_path / "b") == 0
    for name in ("solve.json", "expected_curves.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    s = json.loads((tmp_path / "a" / "solve.json").read_text())
    assert s["F2_0"] == pytest.approx(356_250.37, abs=0.5)
    assert s["v1_star"] + s["v2_star"] == pytest.approx(250_000.0)
    assert s["value_V1"]["first_deriv"] == pytest.approx(s["lambda1_star"], rel=1e-6)
    head = (tmp_path / "a" / "expected_curves.csv").read_text().splitlines()[0]
    assert head.startswith("# config_sha256=") and "seed=20181017" in head


def test_infeasible_endowment_exit_code(tmp_path, capsys):
    cfg = edited_config(tmp_path, v0=-400_000.0)
    assert run("solve", "--config", cfg, "--out", tmp_path / "o") == 2
    assert "F(0) = -291609" in capsys.readouterr().err


def test_config_error_names_field(tmp_path, capsys):
    cfg = edited_config(tmp_path, market__r="fast")
    assert run("solve", "--config", cfg, "--out", tmp_path / "o") == 2
    assert "market.r" in capsys.readouterr().err


def test_simulate_determinism_and_floors(tmp_path):
    for d in ("a", "b"):
        assert run("simulate", "--config", CASE, "--out", tmp_path / d, "--paths", 3,
                   "--steps", 104, "--seed", 5) == 0
    a = (tmp_path / "a" / "paths.csv").read_bytes()
    assert a == (tmp_path / "b" / "paths.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "paths.csv")
    assert rows.size == 3 * 105
    assert np.all(rows["V_star"] > rows["F_t"])
    assert (tmp_path / "a" / "summary_quantiles.csv").exists()


def test_scenario_replay_expected_path(tmp_path):
    assert run("solve", "--config", CASE, "--out", tmp_path) == 0
    t = np.linspace(0, 40, 81)
    lines = ["t,price"] + [f"{float(x)!r},{float(100 * np.exp(0.05 * x))!r}" for x in t]
    scen = tmp_path / "up.csv"
    scen.write_text("\n".join(lines) + "\n")
    assert run("simulate", "--config", CASE, "--out", tmp_path, "--scenario", scen) == 0
    rows = read_csv(tmp_path / "scenario.csv")
    assert rows.size == t.size
    assert np.all(rows["V_star"] > rows["F_t"])
    # the expected-price path is a single scenario, not the mean, so only the start coincides
    curves = read_csv(tmp_path / "expected_curves.csv")
    assert rows["V_star"][0] == pytest.approx(curves["E_V_star"][0], rel=1e-8)
    assert rows["c_star"][0] == pytest.approx(curves["E_c_star"][0], rel=1e-10)


@pytest.mark.parametrize("body", ["t,price\n0,100\n1,-3\n", "time,px\n0,100\n1,101\n",
                                  "t,price\n0,100\n"])
def test_bad_scenario_exit_code(tmp_path, body):
    scen = tmp_path / "bad.csv"
    scen.write_text(body)
    assert run("simulate", "--config", CASE, "--out", tmp_path, "--scenario", scen) == 3


def test_validate_passes_on_case_study_config(tmp_path):
    code = run("validate", "--config", CASE, "--out", tmp_path, "--paths", 2000, "--steps", 260)
    report = json.loads((tmp_path / "validate.json").read_text())
    assert {c["name"]: c["passed"] for c in report["checks"]} == {
        "budget_equality_closed_form": True, "budget_equality_monte_carlo": True,
        "floor_preservation": True, "special_case_equivalence": True, "gradient_V1": True,
        "gradient_V2": True, "self_financing": True}
    assert code == 0


def test_validate_detects_corrupted_lambda(tmp_path):
    code = run("validate", "--config", CASE, "--out", tmp_path, "--paths", 2000, "--steps", 260,
               "--perturb-lambda", 1.01)
    checks = {c["name"]: c["passed"]
              for c in json.loads((tmp_path / "validate.json").read_text())["checks"]}
    assert code == 1
    assert not checks["budget_equality_closed_form"]


def test_validate_constant_b_config(tmp_path):
    run("validate", "--config", CONST_B, "--out", tmp_path, "--paths", 2000, "--steps", 260)
    checks = {c["name"]: c for c in json.loads((tmp_path / "validate.json").read_text())["checks"]}
    assert checks["special_case_equivalence"]["passed"]
    assert checks["budget_equality_closed_form"]["passed"]


def test_calibrate_smoke_with_linear_target(tmp_path):
    t = np.linspace(0, 40, 27)
    body = ["t,consumption,allocation"] + [f"{x!r},{20000 + 300 * x!r},{0.8 - 0.01 * x!r}"
                                           for x in map(float, t)]
    target = tmp_path / "target.csv"
    target.write_text("\n".join(body) + "\n")
    raw = json.loads(Path(CONST_B).read_text())
    raw["calibration"] = {"variant": "BOTH_CONST", "grid_points": 27, "n_starts": 1,
                          "simplex_maxfev": 20, "lsq_max_nfev": 30}
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(raw))
    assert run("calibrate", "--config", cfg, "--out", tmp_path, "--target", target) == 0
    res = json.loads((tmp_path / "calibration_BOTH_CONST.json").read_text())
    assert res["lam_a"] == 0.0 and res["lam_b"] == 0.0
    assert np.isfinite(res["ssrd"]) and isinstance(res["converged"], bool)
    assert (tmp_path / "calibration_BOTH_CONST_curves.csv").exists()


def test_config_roundtrip():
    cfg = load_config(CASE)
    assert cfg.cashflows.F == pytest.approx(435_125.18, abs=0.01)
    assert cfg.seed == 20181017
