import json

import pytest

from backaction import cli
from backaction.params import DerivedParams


def run(tmp_path, cfg, *extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return cli.main(["--config", str(path), "--out", str(tmp_path / "out"), *extra])


def outputs(tmp_path, pattern="*"):
    return sorted((tmp_path / "out").glob(pattern))


def test_derive_round_trip(tmp_path, paper):
    assert cli.main(["--mode", "derive", "--out", str(tmp_path / "out")]) == 0
    (summary,) = outputs(tmp_path, "derive_none_*.json")
    data = json.loads(summary.read_text())
    assert data["derived"]["A_sa"] == pytest.approx(9e-21, rel=0.02)
    assert DerivedParams.from_dict(data["derived"]) == paper


def test_thermal_run_table(tmp_path):
    cfg = {"mode": "thermal-run", "schedule": {"intervals_pi": [1.0], "labels": [1]}}
    assert run(tmp_path, cfg, "--grid", "41,31") == 0
    (summary,) = outputs(tmp_path, "thermal-run_p_*[0-9a-f].json")
    data = json.loads(summary.read_text())
    t = data["outcome_probabilities"]
    assert (t["+1"], t["+0"], t["-1"]) == pytest.approx((0.375, 0.25, 0.375), abs=1e-3)
    assert sum(t.values()) == pytest.approx(1.0, abs=1e-8)
    assert all(0 <= p <= 1 for p in t.values())
    assert data["nq"] == 41 and data["nk"] == 31
    names = [p.name for p in outputs(tmp_path)]
    assert any(n.endswith("_functionals.csv") for n in names)
    (grid,) = [p for p in outputs(tmp_path, "thermal-run_p_*.csv") if "functionals" not in p.name]
    assert grid.read_text().splitlines()[0] == "x,p,w"


def test_coherent_run(tmp_path):
    cfg = {
        "mode": "coherent-run",
        "schedule": {"intervals_pi": [1, 1], "labels": [0, 1]},
        "initial": {"kind": "coherent", "a0": 1, "b0": 1},
    }
    assert run(tmp_path, cfg, "--grid", "61,61") == 0
    assert outputs(tmp_path, "coherent-run_zp_*_branches.csv")
    (summary,) = outputs(tmp_path, "coherent-run_zp_*.json")
    data = json.loads(summary.read_text())
    assert data["outcome_probability_total"] == pytest.approx(1.0, abs=1e-10)
    assert data["min_w"] < 0


def test_sweep_and_names_do_not_collide(tmp_path):
    cfg = {"mode": "sweep", "schedule": {"intervals_pi": [1.0], "labels": [1]}}
    assert run(tmp_path, cfg, "--sweep", "0.01,0.1", "--grid", "31,31") == 0
    assert len(outputs(tmp_path, "sweep_p_*_00[01].csv")) == 2
    summaries = [p for p in outputs(tmp_path, "sweep_p_*.json") if not p.stem.endswith(("_000", "_001"))]
    assert len(summaries) == 1
    rows = json.loads(summaries[0].read_text())["sweep"]
    assert [r["A_scale"] for r in rows] == [0.01, 0.1]


def test_negativity_scan(tmp_path):
    cfg = {
        "mode": "negativity-scan",
        "schedule": {"intervals_pi": [1], "labels": [0]},
        "initial": {"kind": "coherent", "a0": 1, "b0": 1},
        "scan": {"t_min_pi": 0.9, "t_max_pi": 1.1, "step_pi": 0.1, "grid_points": 61},
    }
    assert run(tmp_path, cfg) == 0
    (table,) = outputs(tmp_path, "negativity-scan_z_*.csv")
    assert len(table.read_text().splitlines()) == 4


def test_oracle_compare(tmp_path):
    cfg = {"mode": "oracle-compare", "schedule": {"intervals_pi": [0.3, 0.7]}, "oracle": {"nbar": 1.0, "kappa": 1.2}}
    assert run(tmp_path, cfg) == 0
    (report,) = outputs(tmp_path, "oracle-compare_*.json")
    data = json.loads(report.read_text())
    assert data["verdict"] == "PASS" and data["max_abs_diff"] <= 1e-8


def test_oracle_failure_exit_code(tmp_path):
    cfg = {"mode": "oracle-compare", "schedule": {"intervals_pi": [0.5]}, "oracle": {"nbar": 5.0, "kappa": 1.0, "n_max": 30}}
    # forcing a tiny Fock space makes the thermal tail impossible to hold
    assert run(tmp_path, cfg) in (cli.EXIT_ORACLE,)


def test_deterministic_outputs_identical(tmp_path):
    cfg = {"mode": "thermal-run", "schedule": {"intervals_pi": [0.5, 1.0], "labels": [1, 0]}, "deterministic": True}
    assert run(tmp_path, cfg) == 0
    first = {p.name: p.read_bytes() for p in outputs(tmp_path)}
    assert run(tmp_path, cfg) == 0
    second = {p.name: p.read_bytes() for p in outputs(tmp_path)}
    assert first == second


@pytest.mark.parametrize(
    "cfg",
    [
        {"mode": "nonsense"},
        {"mode": "thermal-run"},
        {"mode": "thermal-run", "schedule": {"intervals_pi": [-1], "labels": [1]}},
        {"mode": "thermal-run", "schedule": {"intervals_pi": [1], "labels": [2]}},
        {"mode": "derive", "params": {"mass": 1.0}},
        {"mode": "derive", "unknown": 3},
        {"mode": "coherent-run", "schedule": {"intervals_pi": [1], "labels": [1]}},
    ],
)
def test_config_errors(tmp_path, cfg):
    assert run(tmp_path, cfg) == cli.EXIT_CONFIG


def test_bad_grid_flag(tmp_path):
    assert run(tmp_path, {"mode": "derive"}, "--grid", "12") == cli.EXIT_CONFIG


def test_cap_exit_code(tmp_path):
    cfg = {"mode": "thermal-run", "schedule": {"intervals_pi": [1] * 7, "labels": [1] * 7}}
    assert run(tmp_path, cfg) == cli.EXIT_CAP


def test_params_file_relative_to_config(tmp_path, paper):
    from backaction.params import PAPER_PARAMS

    (tmp_path / "p.json").write_text(json.dumps(PAPER_PARAMS.__dict__))
    assert run(tmp_path, {"mode": "derive", "params": "p.json"}) == 0
    (summary,) = outputs(tmp_path, "derive_*.json")
    assert DerivedParams.from_dict(json.loads(summary.read_text())["derived"]) == paper
