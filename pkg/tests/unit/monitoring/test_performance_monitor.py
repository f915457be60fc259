"""
Unit tests for sweep resource monitoring
"""

import json
import logging
import math
from unittest.mock import patch

import pytest

from src.monitoring.performance_monitor import SweepMonitor, TaskMetrics


class TestSweepMonitor:
    """Test task recording, thresholds and summaries"""

    def setup_method(self):
        """Set up a monitor with small thresholds"""
        self.monitor = SweepMonitor(max_rss_mb=100, max_task_seconds=5)

    def test_record_task(self):
        """Test a recorded task keeps its timing and failure flag"""
        metrics = self.monitor.record_task("t0", "em_r0", 1.5, failed=True, rss_mb=50)

        assert isinstance(metrics, TaskMetrics)
        assert metrics.wall_time == 1.5
        assert metrics.failed
        assert len(self.monitor.task_metrics) == 1

    def test_rss_measured_when_omitted(self):
        """Test the process RSS is sampled through psutil"""
        with patch.object(SweepMonitor, "current_rss_mb", return_value=42.0):
            metrics = self.monitor.record_task("t0", "em_r0", 0.1)

        assert metrics.rss_mb == 42.0

    def test_threshold_warnings(self, caplog):
        """Test slow tasks and high memory are logged"""
        with caplog.at_level(logging.WARNING):
            self.monitor.record_task("slow", "em_r0", 9.0, rss_mb=500)

        assert "High memory usage" in caplog.text
        assert "Slow task slow" in caplog.text

    def test_no_warning_within_thresholds(self, caplog):
        """Test normal tasks log nothing"""
        with caplog.at_level(logging.WARNING):
            self.monitor.record_task("fast", "em_r0", 0.5, rss_mb=10)

        assert caplog.text == ""

    def test_summary(self):
        """Test counts, failures and per-series statistics"""
        self.monitor.record_task("a", "em_r0", 1.0, rss_mb=10)
        self.monitor.record_task("b", "em_r0", 3.0, rss_mb=30)
        self.monitor.record_task("c", "em_is_r0", 2.0, failed=True, rss_mb=20)

        summary = self.monitor.summary()

        assert summary["tasks"] == 3
        assert summary["failures"] == 1
        assert summary["mean_wall_time"] == pytest.approx(2.0)
        assert summary["max_wall_time"] == 3.0
        assert summary["peak_rss_mb"] == 30
        assert summary["per_algorithm"]["em_r0"]["tasks"] == 2
        assert summary["per_algorithm"]["em_r0"]["median_wall_time"] == 2.0

    def test_peak_skips_unmeasured_tasks(self):
        """Test tasks without a worker RSS do not enter the peak"""
        self.monitor.record_task("a", "em_r0", 1.0, rss_mb=25)
        self.monitor.record_task("b", "em_r0", 1.0, failed=True, rss_mb=math.nan)

        with patch.object(SweepMonitor, "current_rss_mb", return_value=900.0):
            summary = self.monitor.summary()

        assert summary["peak_rss_mb"] == 25
        assert summary["parent_rss_mb"] == 900.0

    def test_empty_summary(self):
        """Test a monitor without tasks still summarizes"""
        summary = self.monitor.summary()

        assert summary["tasks"] == 0
        assert summary["peak_rss_mb"] is None
        assert summary["parent_rss_mb"] > 0
        assert summary["per_algorithm"] == {}

    def test_write_summary(self, tmp_path):
        """Test the summary is merged with extra fields and written as JSON"""
        self.monitor.record_task("a", "em_r0", 1.0, rss_mb=10)

        path = self.monitor.write_summary(
            tmp_path / "out" / "sweep_summary.json", extra={"name": "tiny"}
        )

        payload = json.loads(path.read_text())
        assert payload["name"] == "tiny"
        assert payload["monitor"]["tasks"] == 1

    def test_export_tasks(self):
        """Test exported tasks carry ISO timestamps"""
        self.monitor.record_task("a", "em_r0", 1.0, rss_mb=10)

        exported = self.monitor.export_tasks()

        assert exported[0]["task_id"] == "a"
        assert isinstance(exported[0]["timestamp"], str)
