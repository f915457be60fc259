"""
Batch execution of benchmark sweeps
References: docs/algorithms.md - Benchmark harness

Every (cell, replicate, algorithm) triple is an independent task. Tasks run
inline or on a process pool; results are merged in deterministic order so
the worker count never changes any output value.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.config.sweep_config import (
    AlgorithmSpec,
    FitSettings,
    GridCell,
    SweepConfig,
    derive_seed,
)
from src.data.dataset_io import write_dataset, write_truth
from src.data.generator import generate_problem
from src.engine.em_engine import fit
from src.metrics.accuracy import acc, rmse
from src.metrics.resolvability import resolvability_report
from src.models.problem_models import ProblemSpec
from src.monitoring.performance_monitor import SweepMonitor
from src.utils.clr_exceptions import CLRError, classify_fit_error
from src.utils.numeric_warnings import suppress_numeric_warnings

logger = logging.getLogger(__name__)


@dataclass
class SweepTask:
    """One fit of one generated problem"""

    cell: GridCell
    replicate: int
    algorithm: AlgorithmSpec
    algorithm_index: int
    problem_seed: int
    fit_seed: int
    settings: FitSettings
    norm_mode: str = "cluster"

    @property
    def task_id(self) -> str:
        return f"cell{self.cell.index}_rep{self.replicate}_{self.algorithm.label}"

    def problem_spec(self) -> ProblemSpec:
        return ProblemSpec(
            K=self.cell.K,
            p=self.cell.p,
            cluster_sizes=self.cell.cluster_sizes,
            dp=self.cell.dp,
            eta=self.cell.eta,
            delta=self.cell.delta,
            corrupt_frac=self.cell.corrupt_frac,
            seed=self.problem_seed,
        )


@dataclass
class ResultRecord:
    """Metrics of one (cell, replicate, algorithm) fit"""

    cell_index: int
    cell_key: str
    K: int
    p: int
    split: str
    N: int
    dp: float
    eta: float
    delta: float
    corrupt_frac: float
    replicate: int
    seed: int
    fit_seed: int
    algorithm: str
    restarts: int
    series: str
    algorithm_index: int = 0
    acc: float = math.nan
    rmse_weighted: float = math.nan
    R_global: float = math.nan
    R_true: float = math.nan
    R_pairwise: List[float] = field(default_factory=list)
    iterations: int = 0
    restarts_used: int = 0
    revival_events: int = 0
    wall_time: float = 0.0
    # RSS of the process that ran the task, NaN when the worker crashed
    worker_rss_mb: float = math.nan
    converged: bool = False
    failed: bool = False
    failure: Optional[str] = None

    @property
    def sort_key(self):
        return (self.cell_index, self.replicate, self.algorithm_index)

    def to_row(self, n_pairs: int) -> Dict[str, Any]:
        """Flat CSV row with R_pairwise spread over rp_1..rp_{n_pairs}"""
        row = asdict(self)
        pairs = row.pop("R_pairwise")
        row.pop("algorithm_index")
        for i in range(n_pairs):
            row[f"rp_{i + 1}"] = pairs[i] if i < len(pairs) else math.nan
        return row


def _base_record(task: SweepTask) -> ResultRecord:
    cell = task.cell
    return ResultRecord(
        cell_index=cell.index,
        cell_key=cell.key,
        K=cell.K,
        p=cell.p,
        split=cell.split_label,
        N=int(sum(cell.cluster_sizes)),
        dp=cell.dp,
        eta=cell.eta,
        delta=cell.delta,
        corrupt_frac=cell.corrupt_frac,
        replicate=task.replicate,
        seed=task.problem_seed,
        fit_seed=task.fit_seed,
        algorithm=task.algorithm.name,
        restarts=task.algorithm.restarts,
        series=task.algorithm.label,
        algorithm_index=task.algorithm_index,
    )


def run_sweep_task(task: SweepTask) -> ResultRecord:
    """
    Generate the task's problem, fit it and compute its metrics.

    Failures never propagate: they are classified and stored in the record.
    """
    record = _base_record(task)
    start = time.perf_counter()
    try:
        with suppress_numeric_warnings():
            ds, truth = generate_problem(task.problem_spec())
            cfg = task.settings.em_config(task.cell.K, task.fit_seed)
            result = fit(
                ds,
                task.algorithm.name,
                cfg,
                restarts=task.algorithm.restarts,
                split_params=task.settings.split,
                elite_params=task.settings.elite,
            )
            model = result.best_model

            record.acc = acc(model.beta, truth.beta, task.norm_mode)
            record.rmse_weighted = rmse(ds, model, "weighted")
            report = resolvability_report(ds.X, model.beta, model.sigma)
            record.R_global = report.R_global
            record.R_pairwise = [float(v) for v in report.R_pairwise]
            record.R_true = resolvability_report(
                ds.X, truth.beta, truth.sigma
            ).R_global

        record.iterations = result.iterations
        record.restarts_used = result.restarts_used
        record.revival_events = result.revival_events
        record.converged = result.converged
        record.failed = result.failed
        record.failure = result.failure
    except Exception as e:
        record.failed = True
        record.failure = classify_fit_error(e)
        details = e.details if isinstance(e, CLRError) else str(e)
        logger.warning(f"Task {task.task_id} failed ({record.failure}): {details}")

    record.wall_time = time.perf_counter() - start
    record.worker_rss_mb = SweepMonitor.current_rss_mb()
    return record


class SweepRunner:
    """
    Expands a sweep into tasks and executes them
    """

    def __init__(
        self,
        config: SweepConfig,
        workers: Optional[int] = None,
        monitor: Optional[SweepMonitor] = None,
    ):
        """Initialize the runner with a sweep, worker count and monitor."""
        self.config = config
        self.workers = workers or config.workers
        self.monitor = monitor or SweepMonitor()

    def build_tasks(self) -> List[SweepTask]:
        """All tasks in (cell, replicate, algorithm) order"""
        settings = FitSettings(
            em=self.config.em, split=self.config.split, elite=self.config.elite
        )
        tasks = []
        for cell in self.config.grid.cells():
            for replicate in range(self.config.problems_per_cell):
                problem_seed = derive_seed(
                    self.config.base_seed, cell.key, replicate, "problem"
                )
                fit_seed = derive_seed(
                    self.config.base_seed, cell.key, replicate, "fit"
                )
                for index, algorithm in enumerate(self.config.algorithms):
                    tasks.append(
                        SweepTask(
                            cell=cell,
                            replicate=replicate,
                            algorithm=algorithm,
                            algorithm_index=index,
                            problem_seed=problem_seed,
                            fit_seed=fit_seed,
                            settings=settings,
                            norm_mode=self.config.norm_mode,
                        )
                    )
        return tasks

    def run(self) -> List[ResultRecord]:
        """
        Execute every task.

        Returns:
            Records sorted by (cell, replicate, algorithm)
        """
        tasks = self.build_tasks()
        if not tasks:
            logger.info("Sweep has no tasks")
            return []

        logger.info(f"Running {len(tasks)} tasks with {self.workers} worker(s)")
        records: List[ResultRecord] = []

        if self.workers == 1:
            for task in tasks:
                records.append(self._collect(task, run_sweep_task(task)))
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                futures = {
                    executor.submit(run_sweep_task, task): task for task in tasks
                }
                for future in as_completed(futures):
                    task = futures[future]
                    try:
                        record = future.result()
                    except Exception as e:
                        record = _base_record(task)
                        record.failed = True
                        record.failure = classify_fit_error(e)
                        logger.error(f"Worker crashed on {task.task_id}: {e}")
                    records.append(self._collect(task, record))

        records.sort(key=lambda r: r.sort_key)
        failures = sum(1 for r in records if r.failed)
        logger.info(f"Sweep finished: {len(records)} records, {failures} failed")
        return records

    def _collect(self, task: SweepTask, record: ResultRecord) -> ResultRecord:
        self.monitor.record_task(
            task.task_id,
            task.algorithm.label,
            record.wall_time,
            failed=record.failed,
            rss_mb=record.worker_rss_mb,
        )
        return record


def generate_suite(config: SweepConfig, out_dir: Path) -> Dict[str, List[str]]:
    """
    Write one dataset CSV and one truth JSON per (cell, replicate).

    Cells whose problems cannot be generated are reported and skipped.

    Returns:
        Dict with the written "files" and per-cell "errors"
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[str] = []
    errors: List[str] = []

    for cell in config.grid.cells():
        for replicate in range(config.problems_per_cell):
            seed = derive_seed(config.base_seed, cell.key, replicate, "problem")
            spec = ProblemSpec(
                K=cell.K,
                p=cell.p,
                cluster_sizes=cell.cluster_sizes,
                dp=cell.dp,
                eta=cell.eta,
                delta=cell.delta,
                corrupt_frac=cell.corrupt_frac,
                seed=seed,
            )
            try:
                ds, truth = generate_problem(spec)
            except CLRError as e:
                errors.append(f"cell {cell.index} ({cell.key}): {e.details}")
                logger.warning(f"Skipping cell {cell.index}: {e.details}")
                break

            stem = f"cell{cell.index:03d}_rep{replicate:03d}"
            written.append(str(write_dataset(ds, out_dir / f"{stem}.csv")))
            written.append(str(write_truth(truth, out_dir / f"{stem}.truth.json")))

    logger.info(f"Generated {len(written) // 2} problems in {out_dir}")
    return {"files": written, "errors": errors}
