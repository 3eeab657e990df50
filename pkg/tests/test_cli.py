import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from qosrank.cli import main

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
GOLDEN = Path(__file__).resolve().parent / "data" / "golden_summary.csv"


@pytest.fixture
def workspace(tmp_path):
    """Config directory with the committed scenario and a small experiment."""
    shutil.copy(CONFIG_DIR / "default_scenario.json", tmp_path / "scenario.json")
    config = {
        "scenario": "scenario.json",
        "densities": [0.1, 0.3],
        "kinds": ["cloudrank1", "cloudrank2", "random-baseline"],
        "k_neighbors": 10,
        "active_users": 10,
        "trial_seeds": list(range(5)),
        "seed": 11,
    }
    (tmp_path / "experiment.json").write_text(json.dumps(config))
    return tmp_path


def run(args, capsys):
    code = main([str(a) for a in args])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_rank_fully_observed_sorts_by_qos(tmp_path, capsys):
    rng = np.random.default_rng(0)
    values = rng.uniform(0, 1, (3, 6))
    lines = ["user_id,service_id,qos_value"] + [
        f"{u},{s},{float(values[u, s])!r}" for u in range(3) for s in range(6)
    ]
    (tmp_path / "data.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "cfg.json").write_text(
        json.dumps({"dataset": "data.csv", "densities": [0.5], "kinds": ["cloudrank1"]})
    )
    code, out, _ = run(["rank", "--config", tmp_path / "cfg.json", "--user", 0], capsys)
    assert code == 0
    expected = " ".join(str(s) for s in np.argsort(-values[0]))
    assert out.strip() == expected


def test_rank_smaller_is_better_orientation(tmp_path, capsys):
    # response-time style metric: lower raw value must rank first
    lines = ["user_id,service_id,qos_value", "0,0,3.0", "0,1,1.0", "0,2,2.0"]
    (tmp_path / "data.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "cfg.json").write_text(
        json.dumps(
            {
                "dataset": "data.csv",
                "orientation": "smaller-is-better",
                "densities": [0.5],
                "kinds": ["cloudrank1"],
            }
        )
    )
    code, out, _ = run(["rank", "--config", tmp_path / "cfg.json", "--user", 0], capsys)
    assert code == 0
    assert out.strip() == "1 2 0"


def test_module_entry_point(workspace):
    import subprocess
    import sys

    result = subprocess.run(
        [sys.executable, "-m", "qosrank", "rank", "--config",
         str(workspace / "experiment.json"), "--user", "0"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.strip()


def test_rank_repeated_invocation_identical(workspace, capsys):
    args = ["rank", "--config", workspace / "experiment.json", "--user", 3]
    code_a, out_a, _ = run(args, capsys)
    code_b, out_b, _ = run(args, capsys)
    assert code_a == code_b == 0
    assert out_a == out_b


def test_rank_unknown_user_exits_one(workspace, capsys):
    code, _, err = run(
        ["rank", "--config", workspace / "experiment.json", "--user", 9999], capsys
    )
    assert code == 1
    assert "user" in err


def test_rank_degenerate_user_ascending(tmp_path, capsys):
    # user 0 has no observations and K=0: pure tie-break ranking
    lines = ["user_id,service_id,qos_value", "1,0,0.4", "1,1,0.9", "1,2,0.1"]
    (tmp_path / "data.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "cfg.json").write_text(
        json.dumps(
            {
                "dataset": "data.csv",
                "densities": [0.5],
                "kinds": ["cloudrank1"],
                "k_neighbors": 0,
            }
        )
    )
    code, out, _ = run(
        ["rank", "--config", tmp_path / "cfg.json", "--user", 0, "--kind", "cloudrank1"],
        capsys,
    )
    assert code == 0
    assert out.strip() == "0 1 2"


def test_evaluate_writes_reports(workspace, capsys):
    out_dir = workspace / "out"
    code, out, _ = run(
        ["evaluate", "--config", workspace / "experiment.json", "--out", out_dir], capsys
    )
    assert code == 0
    summary = (out_dir / "summary.csv").read_text().splitlines()
    assert summary[0] == "density,kind,mean_tau,std_tau,mean_accuracy,trials"
    assert len(summary) == 1 + 6  # 2 densities x 3 kinds
    report = (out_dir / "report.csv").read_text().splitlines()
    assert report[0] == "density,kind,user_id,tau,accuracy,evaluated_pairs"
    qos = (out_dir / "qos_performance.csv").read_text().splitlines()
    assert qos[0] == "density,kind,mean_top1_qos,samples"
    assert len(qos) == 1 + 6


def test_evaluate_summary_matches_detail_rows(workspace, capsys):
    out_dir = workspace / "out"
    code, _, _ = run(
        ["evaluate", "--config", workspace / "experiment.json", "--out", out_dir], capsys
    )
    assert code == 0
    detail = {}
    for line in (out_dir / "report.csv").read_text().splitlines()[1:]:
        density, kind, _, tau, _, _ = line.split(",")
        detail.setdefault((density, kind), []).append(float(tau))
    for line in (out_dir / "summary.csv").read_text().splitlines()[1:]:
        density, kind, mean_tau, _, _, trials = line.split(",")
        cell = detail[(density, kind)]
        assert float(mean_tau) == pytest.approx(np.mean(cell), abs=1e-9)
        assert int(trials) == len(cell)


def test_evaluate_runs_are_byte_identical(workspace, capsys):
    code, _, _ = run(
        ["evaluate", "--config", workspace / "experiment.json", "--out", workspace / "a"],
        capsys,
    )
    assert code == 0
    code, _, _ = run(
        ["evaluate", "--config", workspace / "experiment.json", "--out", workspace / "b"],
        capsys,
    )
    assert code == 0
    for name in ("report.csv", "summary.csv", "qos_performance.csv"):
        assert (workspace / "a" / name).read_bytes() == (workspace / "b" / name).read_bytes()


def test_evaluate_golden_summary(workspace, capsys):
    """Seeded end-to-end run committed as a golden file."""
    out_dir = workspace / "golden_check"
    code, _, _ = run(
        ["evaluate", "--config", workspace / "experiment.json", "--out", out_dir], capsys
    )
    assert code == 0
    assert (out_dir / "summary.csv").read_bytes() == GOLDEN.read_bytes()
    # the golden run itself shows cloudrank beating random by >= 0.1
    rows = [line.split(",") for line in GOLDEN.read_text().splitlines()[1:]]
    acc = {(r[0], r[1]): float(r[4]) for r in rows}
    for density in ("0.1", "0.3"):
        assert acc[(density, "cloudrank2")] >= acc[(density, "random-baseline")] + 0.1


def test_evaluate_missing_dataset_exits_two(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text(
        json.dumps({"dataset": "missing.csv", "densities": [0.5], "kinds": ["cloudrank1"]})
    )
    code, _, err = run(
        ["evaluate", "--config", tmp_path / "cfg.json", "--out", tmp_path / "out"], capsys
    )
    assert code == 2
    assert "data error" in err


def test_bad_config_exits_one(tmp_path, capsys):
    (tmp_path / "cfg.json").write_text("{not json")
    code, _, err = run(
        ["evaluate", "--config", tmp_path / "cfg.json", "--out", tmp_path / "out"], capsys
    )
    assert code == 1


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["rank", "--user", "1"])  # missing --config
    assert exc.value.code == 1


def test_simulate_writes_matrix_and_plan(workspace, capsys):
    out_dir = workspace / "sim"
    code, out, _ = run(
        ["simulate", "--scenario", workspace / "scenario.json", "--out", out_dir], capsys
    )
    assert code == 0
    assert (out_dir / "qos_best-fit-decreasing.csv").exists()
    plan = (out_dir / "plan_best-fit-decreasing.csv").read_text().splitlines()
    assert plan[0] == "vm_id,host_id"
    assert len(plan) == 1 + 30


def test_simulate_policies_differ(workspace, capsys):
    out_dir = workspace / "sim"
    run(["simulate", "--scenario", workspace / "scenario.json", "--out", out_dir], capsys)
    code, out, err = run(
        [
            "simulate",
            "--scenario",
            workspace / "scenario.json",
            "--out",
            out_dir,
            "--policy",
            "round-robin",
        ],
        capsys,
    )
    assert code == 0
    assert "unplaced VMs [29]" in err
    bf = (out_dir / "qos_best-fit-decreasing.csv").read_text()
    rr = (out_dir / "qos_round-robin.csv").read_text()
    assert bf != rr


def test_simulate_deterministic(workspace, capsys):
    for name in ("x", "y"):
        run(
            ["simulate", "--scenario", workspace / "scenario.json", "--out", workspace / name],
            capsys,
        )
    a = (workspace / "x" / "qos_best-fit-decreasing.csv").read_bytes()
    b = (workspace / "y" / "qos_best-fit-decreasing.csv").read_bytes()
    assert a == b


def test_simulate_allocation_failure_exits_three(tmp_path, capsys):
    scenario = {
        "hosts": {"count": 1, "mips": 100.0, "ram": 1024.0, "bw": 100.0},
        "vms": [{"mips": 500.0, "ram": 64.0, "bw": 10.0}],
        "cloudlets": [1000.0],
        "policy": "best-fit-decreasing",
        "num_users": 3,
        "seed": 1,
    }
    (tmp_path / "scenario.json").write_text(json.dumps(scenario))
    code, _, err = run(
        ["simulate", "--scenario", tmp_path / "scenario.json", "--out", tmp_path / "out"],
        capsys,
    )
    assert code == 3
    assert "allocation failure" in err
