"""
Resource monitoring for benchmark sweeps
References: docs/algorithms.md - Benchmark harness

Records wall time per sweep task and the resident memory of the process
that ran it, warns when
thresholds are exceeded and summarizes the run next to the aggregates.
"""

import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import psutil


@dataclass
class TaskMetrics:
    """Resource usage of one sweep task"""

    task_id: str
    algorithm: str
    wall_time: float
    # RSS of the process that ran the task; NaN if unknown
    rss_mb: float
    failed: bool
    timestamp: datetime


class SweepMonitor:
    """
    Tracks per-task resource usage during a sweep
    """

    def __init__(self, max_rss_mb: float = 4096, max_task_seconds: float = 600):
        """Initialize the monitor with memory and task-time thresholds."""
        self.task_metrics: List[TaskMetrics] = []
        self.thresholds = {
            "max_rss_mb": max_rss_mb,
            "max_task_seconds": max_task_seconds,
        }
        self.started_at = datetime.now()
        self.logger = logging.getLogger(__name__)

    @staticmethod
    def current_rss_mb() -> float:
        """Resident set size of the calling process in MB"""
        return psutil.Process().memory_info().rss / (1024 * 1024)

    def record_task(
        self,
        task_id: str,
        algorithm: str,
        wall_time: float,
        failed: bool = False,
        rss_mb: Optional[float] = None,
    ) -> TaskMetrics:
        """Record the outcome of one task and check thresholds"""
        metrics = TaskMetrics(
            task_id=task_id,
            algorithm=algorithm,
            wall_time=float(wall_time),
            rss_mb=self.current_rss_mb() if rss_mb is None else float(rss_mb),
            failed=failed,
            timestamp=datetime.now(),
        )
        self.task_metrics.append(metrics)
        self._check_thresholds(metrics)
        return metrics

    def _check_thresholds(self, metrics: TaskMetrics):
        """Log a warning for every exceeded threshold"""
        warnings = []

        if metrics.rss_mb > self.thresholds["max_rss_mb"]:
            warnings.append(f"High memory usage: {metrics.rss_mb:.1f}MB")

        if metrics.wall_time > self.thresholds["max_task_seconds"]:
            warnings.append(
                f"Slow task {metrics.task_id}: {metrics.wall_time:.1f}s"
            )

        for warning in warnings:
            self.logger.warning(f"Performance threshold exceeded: {warning}")

    def _peak_task_rss(self) -> Optional[float]:
        measured = [m.rss_mb for m in self.task_metrics if math.isfinite(m.rss_mb)]
        return max(measured) if measured else None

    def summary(self) -> Dict[str, Any]:
        """
        Task counts, failures, time and memory statistics.

        peak_rss_mb is the largest RSS reported by the processes that ran
        tasks (the workers); parent_rss_mb is this process at summary time.
        """
        if not self.task_metrics:
            return {
                "tasks": 0,
                "failures": 0,
                "mean_wall_time": 0.0,
                "max_wall_time": 0.0,
                "peak_rss_mb": None,
                "parent_rss_mb": self.current_rss_mb(),
                "per_algorithm": {},
            }

        wall_times = [m.wall_time for m in self.task_metrics]
        per_algorithm: Dict[str, Dict[str, float]] = {}
        for algorithm in sorted({m.algorithm for m in self.task_metrics}):
            times = [m.wall_time for m in self.task_metrics if m.algorithm == algorithm]
            per_algorithm[algorithm] = {
                "tasks": len(times),
                "mean_wall_time": statistics.mean(times),
                "median_wall_time": statistics.median(times),
            }

        return {
            "tasks": len(self.task_metrics),
            "failures": sum(1 for m in self.task_metrics if m.failed),
            "mean_wall_time": statistics.mean(wall_times),
            "max_wall_time": max(wall_times),
            "peak_rss_mb": self._peak_task_rss(),
            "parent_rss_mb": self.current_rss_mb(),
            "elapsed_seconds": (datetime.now() - self.started_at).total_seconds(),
            "per_algorithm": per_algorithm,
        }

    def write_summary(self, path: Path, extra: Optional[Dict[str, Any]] = None) -> Path:
        """Write the summary, optionally merged with extra fields, as JSON"""
        payload = {**(extra or {}), "monitor": self.summary()}
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, default=str))
        return path

    def export_tasks(self) -> List[Dict[str, Any]]:
        """Per-task metrics as plain dictionaries"""
        return [
            {**asdict(m), "timestamp": m.timestamp.isoformat()}
            for m in self.task_metrics
        ]
