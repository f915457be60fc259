"""
Unit tests for sweep task expansion, execution and suite generation
"""

import math
from unittest.mock import patch

import pytest

from src.batch.batch_processor import (
    ResultRecord,
    SweepRunner,
    generate_suite,
    run_sweep_task,
)
from src.config.sweep_config import AlgorithmSpec, GridSpec, SweepConfig
from src.data.dataset_io import read_dataset, read_truth
from src.monitoring.performance_monitor import SweepMonitor


@pytest.fixture
def tiny_sweep():
    """Two small two-predictor problems fitted by both engines"""
    return SweepConfig(
        name="tiny",
        grid=GridSpec(K=[2], p=[2], cluster_size=[60], eta=[0.1]),
        algorithms=[AlgorithmSpec(name="em"), AlgorithmSpec(name="em_is")],
        problems_per_cell=2,
        base_seed=5,
        em={"max_loop": 50, "perturb_count": 1},
    )


class TestBuildTasks:
    """Test deterministic task expansion"""

    def test_order_and_count(self, tiny_sweep):
        """Test tasks enumerate cell, replicate then algorithm"""
        tasks = SweepRunner(tiny_sweep).build_tasks()

        assert len(tasks) == 4
        assert [(t.replicate, t.algorithm.label) for t in tasks] == [
            (0, "em_r0"),
            (0, "em_is_r0"),
            (1, "em_r0"),
            (1, "em_is_r0"),
        ]

    def test_algorithms_share_problem(self, tiny_sweep):
        """Test every algorithm sees the same problem and fit seeds"""
        tasks = SweepRunner(tiny_sweep).build_tasks()

        assert tasks[0].problem_seed == tasks[1].problem_seed
        assert tasks[0].fit_seed == tasks[1].fit_seed
        assert tasks[0].problem_seed != tasks[2].problem_seed
        assert tasks[0].problem_seed != tasks[0].fit_seed

    def test_problem_spec(self, tiny_sweep):
        """Test the cell parameters reach the generator spec"""
        task = SweepRunner(tiny_sweep).build_tasks()[0]

        spec = task.problem_spec()

        assert spec.cluster_sizes == [60, 60]
        assert spec.seed == task.problem_seed
        assert task.task_id == "cell0_rep0_em_r0"

    def test_empty_sweep(self):
        """Test an empty grid runs no tasks"""
        runner = SweepRunner(SweepConfig(grid=GridSpec(p=[])))

        assert runner.build_tasks() == []
        assert runner.run() == []


class TestRunSweepTask:
    """Test a single task end to end"""

    def test_metrics_filled(self, tiny_sweep):
        """Test a successful fit records ACC, R and iteration counts"""
        task = SweepRunner(tiny_sweep).build_tasks()[0]

        record = run_sweep_task(task)

        assert not record.failed
        assert 0.0 <= record.acc <= 1.0
        assert 0.0 <= record.R_global <= 1.0
        assert len(record.R_pairwise) == 1
        assert record.iterations > 0
        assert record.N == 120
        assert record.wall_time > 0.0
        assert record.worker_rss_mb > 0.0

    def test_failure_recorded(self, tiny_sweep):
        """Test exceptions are classified instead of raised"""
        task = SweepRunner(tiny_sweep).build_tasks()[0]

        with patch(
            "src.batch.batch_processor.fit",
            side_effect=RuntimeError("singular matrix"),
        ):
            record = run_sweep_task(task)

        assert record.failed
        assert record.failure == "linalg"
        assert math.isnan(record.acc)

    def test_dimension_failure(self):
        """Test K > p cells fail with the dimension code"""
        sweep = SweepConfig(grid=GridSpec(K=[3], p=[2]), problems_per_cell=1)
        task = SweepRunner(sweep).build_tasks()[0]

        record = run_sweep_task(task)

        assert record.failed
        assert record.failure == "dimension"


class TestSweepRunner:
    """Test sweep execution"""

    def test_run_sorted_and_monitored(self, tiny_sweep):
        """Test records come back sorted and every task is monitored"""
        monitor = SweepMonitor()

        records = SweepRunner(tiny_sweep, workers=1, monitor=monitor).run()

        assert [r.sort_key for r in records] == sorted(r.sort_key for r in records)
        assert len(monitor.task_metrics) == 4
        assert {r.series for r in records} == {"em_r0", "em_is_r0"}

    def test_worker_rss_reaches_monitor(self, tiny_sweep):
        """Test the RSS sampled by the task process is what the monitor records"""
        monitor = SweepMonitor()
        with patch.object(SweepMonitor, "current_rss_mb", return_value=64.0):
            records = SweepRunner(tiny_sweep, workers=1, monitor=monitor).run()

        assert all(r.worker_rss_mb == 64.0 for r in records)
        assert [m.rss_mb for m in monitor.task_metrics] == [64.0] * 4

    @pytest.mark.slow
    def test_worker_count_invariant(self, tiny_sweep):
        """Test a process pool gives the same metrics as inline execution"""
        inline = SweepRunner(tiny_sweep, workers=1).run()
        pooled = SweepRunner(tiny_sweep, workers=2).run()

        assert [r.acc for r in inline] == [r.acc for r in pooled]
        assert [r.iterations for r in inline] == [r.iterations for r in pooled]

    def test_to_row_spreads_pairs(self):
        """Test pairwise R values become rp_i columns padded with NaN"""
        record = ResultRecord(
            cell_index=0,
            cell_key="k",
            K=2,
            p=1,
            split="60",
            N=120,
            dp=0.2,
            eta=0.1,
            delta=0.0,
            corrupt_frac=0.0,
            replicate=0,
            seed=1,
            fit_seed=2,
            algorithm="em",
            restarts=0,
            series="em_r0",
            R_pairwise=[0.4],
        )

        row = record.to_row(n_pairs=3)

        assert row["rp_1"] == 0.4
        assert math.isnan(row["rp_3"])
        assert "R_pairwise" not in row
        assert "algorithm_index" not in row


class TestGenerateSuite:
    """Test problem suite files"""

    def test_files_written(self, tiny_sweep, tmp_path):
        """Test one CSV and one truth file per replicate"""
        result = generate_suite(tiny_sweep, tmp_path)

        assert len(result["files"]) == 4
        assert result["errors"] == []
        ds = read_dataset(tmp_path / "cell000_rep001.csv")
        truth = read_truth(tmp_path / "cell000_rep001.truth.json")
        assert ds.N == 120
        assert truth.K == 2

    def test_same_problems_as_bench(self, tiny_sweep, tmp_path):
        """Test generated files match the problems the sweep fits"""
        generate_suite(tiny_sweep, tmp_path)
        task = SweepRunner(tiny_sweep).build_tasks()[0]

        truth = read_truth(tmp_path / "cell000_rep000.truth.json")

        assert truth.spec.seed == task.problem_seed

    def test_invalid_cell_reported(self, tmp_path):
        """Test cells that cannot be generated are listed as errors"""
        sweep = SweepConfig(grid=GridSpec(K=[3], p=[2]), problems_per_cell=2)

        result = generate_suite(sweep, tmp_path)

        assert result["files"] == []
        assert len(result["errors"]) == 1
