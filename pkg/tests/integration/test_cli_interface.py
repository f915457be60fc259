"""
Integration tests for CLI functionality.

Runs main.py as a subprocess through the gen, fit, metrics, predict and
bench subcommands on small problems.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import pandas as pd
import pytest
import yaml

project_root = Path(__file__).parent.parent.parent

pytestmark = pytest.mark.integration


def run_cli(*args, cwd=None):
    env = os.environ.copy()
    for name in ("CLR_WORKERS", "CLR_LOG_LEVEL", "CLR_OUT_DIR"):
        env.pop(name, None)
    return subprocess.run(
        [sys.executable, str(project_root / "main.py"), *map(str, args)],
        cwd=cwd or project_root,
        env=env,
        capture_output=True,
        text=True,
        timeout=300,
    )


@pytest.fixture
def sweep_file(tmp_path):
    """One-cell sweep with a single small two-cluster problem"""
    path = tmp_path / "sweep.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "name": "cli",
                "grid": {"K": [2], "p": [2], "cluster_size": [80], "eta": [0.1]},
                "algorithms": [{"name": "em", "restarts": 0}],
                "problems_per_cell": 1,
                "em": {"max_loop": 100, "perturb_count": 2},
            }
        )
    )
    return path


@pytest.fixture
def problem(tmp_path, sweep_file):
    """Dataset and truth files written by gen"""
    out = tmp_path / "problems"
    result = run_cli("gen", "--config", sweep_file, "--out-dir", out)
    assert result.returncode == 0, result.stdout + result.stderr
    return out / "cell000_rep000.csv", out / "cell000_rep000.truth.json"


class TestCLIInterface:
    """Integration tests for CLI functionality"""

    def test_cli_help_display(self):
        """Test that CLI help lists every subcommand"""
        result = run_cli("--help")

        assert result.returncode == 0
        for command in ("gen", "fit", "bench", "metrics", "predict"):
            assert command in result.stdout

    def test_subcommand_help(self):
        """Test fit help documents the engine choice"""
        result = run_cli("fit", "--help")

        assert result.returncode == 0
        assert "--algorithm" in result.stdout
        assert "--restarts" in result.stdout

    def test_missing_file_exit_code(self, tmp_path):
        """Test a missing dataset exits 2 and names the path"""
        missing = tmp_path / "absent.csv"

        result = run_cli("fit", "--data", missing, "-k", "2", "--out-dir", tmp_path)

        assert result.returncode == 2
        assert str(missing) in result.stdout

    def test_invalid_arguments_exit_code(self, tmp_path, problem):
        """Test invalid values exit 1"""
        data, _ = problem

        result = run_cli(
            "fit", "--data", data, "-k", "0", "--out-dir", tmp_path / "fit"
        )

        assert result.returncode == 1

    def test_malformed_dataset(self, tmp_path):
        """Test unreadable dataset contents exit 1"""
        data = tmp_path / "bad.csv"
        data.write_text("a,b\n1,2\n")

        result = run_cli("fit", "--data", data, "-k", "2", "--out-dir", tmp_path)

        assert result.returncode == 1

    def test_gen_fit_metrics_predict(self, tmp_path, problem):
        """Test the full workflow from generated files to predictions"""
        data, truth = problem
        fit_dir = tmp_path / "fit"

        fitted = run_cli(
            "fit",
            "--data",
            data,
            "--truth",
            truth,
            "--algorithm",
            "em_is",
            "--restarts",
            "2",
            "--out-dir",
            fit_dir,
        )
        assert fitted.returncode == 0, fitted.stdout + fitted.stderr
        record = json.loads((fit_dir / "fit_record.json").read_text())
        assert record["K"] == 2
        assert 0.0 <= record["acc"] <= 1.0

        scored = run_cli(
            "metrics",
            "--model",
            fit_dir / "model.json",
            "--data",
            data,
            "--truth",
            truth,
            "--density",
            fit_dir / "density.json",
            "--out-dir",
            tmp_path / "metrics",
        )
        assert scored.returncode == 0, scored.stdout + scored.stderr
        metrics = json.loads((tmp_path / "metrics" / "metrics.json").read_text())
        assert {"R_global", "R_pairwise", "acc", "rmse_weighted"} <= set(metrics)

        rows = tmp_path / "rows.csv"
        pd.DataFrame({"x1": [0.0, 1.0], "x2": [0.5, -0.5]}).to_csv(rows, index=False)
        predicted = run_cli(
            "predict",
            "--model",
            fit_dir / "model.json",
            "--density",
            fit_dir / "density.json",
            "--x",
            rows,
            "--out-dir",
            tmp_path / "pred",
        )
        assert predicted.returncode == 0, predicted.stdout + predicted.stderr
        table = pd.read_csv(tmp_path / "pred" / "predictions.csv")
        assert len(table) == 2
        assert {"yhat_1", "yhat_2", "p_1", "p_2", "xp"} <= set(table.columns)

    def test_fit_deterministic(self, tmp_path, problem):
        """Test repeated fits with one seed write identical model files"""
        data, truth = problem
        outputs = []
        for name in ("first", "second"):
            result = run_cli(
                "fit",
                "--data",
                data,
                "--truth",
                truth,
                "--seed",
                "7",
                "--out-dir",
                tmp_path / name,
            )
            assert result.returncode == 0, result.stdout + result.stderr
            outputs.append((tmp_path / name / "model.json").read_bytes())

        assert outputs[0] == outputs[1]

    def test_demo_profile(self, tmp_path):
        """Test the demo instance can be fitted and profiled along x"""
        demo_dir = tmp_path / "demo"
        generated = run_cli(
            "gen", "--demo", "--n-total", "600", "--out-dir", demo_dir
        )
        assert generated.returncode == 0, generated.stdout + generated.stderr

        fitted = run_cli(
            "fit",
            "--data",
            demo_dir / "demo.csv",
            "--truth",
            demo_dir / "demo.truth.json",
            "--out-dir",
            tmp_path / "fit",
        )
        assert fitted.returncode == 0, fitted.stdout + fitted.stderr

        profiled = run_cli(
            "predict",
            "--model",
            tmp_path / "fit" / "model.json",
            "--density",
            tmp_path / "fit" / "density.json",
            "--profile",
            "-3",
            "3",
            "13",
            "--out-dir",
            tmp_path / "pred",
        )
        assert profiled.returncode == 0, profiled.stdout + profiled.stderr
        profile = pd.read_csv(tmp_path / "pred" / "profile.csv")
        assert len(profile) == 13

    def test_bench_writes_outputs(self, tmp_path, sweep_file):
        """Test a sweep writes results, aggregates and a summary"""
        out = tmp_path / "bench"

        result = run_cli("bench", "--config", sweep_file, "--out-dir", out)

        assert result.returncode == 0, result.stdout + result.stderr
        results = pd.read_csv(out / "results.csv")
        assert len(results) == 1
        assert (out / "aggregates.csv").exists()
        assert (out / "r_vs_acc.csv").exists()
        summary = json.loads((out / "sweep_summary.json").read_text())
        assert summary["records"] == 1

    def test_bench_empty_grid(self, tmp_path):
        """Test an empty grid exits 0 with header-only files"""
        config = tmp_path / "empty.yaml"
        config.write_text(yaml.safe_dump({"grid": {"p": []}}))
        out = tmp_path / "bench"

        result = run_cli("bench", "--config", config, "--out-dir", out)

        assert result.returncode == 0, result.stdout + result.stderr
        assert pd.read_csv(out / "results.csv").empty
