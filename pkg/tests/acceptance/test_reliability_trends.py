"""
Benchmark-scale reliability checks of the EM and EM_is engines.

Each test runs a reduced sweep and compares mean ACC between algorithms or
problem classes. Set CLR_ACCEPTANCE_SEEDS to cap the replicate count and
CLR_WORKERS to run the sweeps on a process pool.
"""

from typing import Dict, List

import pandas as pd
import pytest

from src.batch.batch_processor import SweepRunner
from src.config.sweep_config import (
    AlgorithmSpec,
    BenchSettings,
    GridSpec,
    SweepConfig,
)
from src.reports.sweep_reports import aggregate, r_vs_acc_bins, records_frame

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


def run_sweep(grid: GridSpec, algorithms: List[Dict], problems: int) -> pd.DataFrame:
    """Per cell and series aggregates of a reduced sweep"""
    config = SweepConfig(
        name="acceptance",
        grid=grid,
        algorithms=[AlgorithmSpec(**spec) for spec in algorithms],
        problems_per_cell=problems,
        base_seed=2024,
    )
    workers = BenchSettings.from_environment().workers or 1
    return records_frame(SweepRunner(config, workers=workers).run())


def mean_acc(frame: pd.DataFrame, series: str, **cell) -> float:
    table = aggregate(frame)
    mask = table["series"] == series
    for column, value in cell.items():
        mask &= table[column] == value
    rows = table[mask]
    assert len(rows) == 1, f"expected one cell for {series} {cell}"
    return float(rows.iloc[0]["mean_acc"])


class TestEngineReliability:
    """EM_is against plain EM on hard three- and four-cluster classes"""

    def test_em_is_beats_em_without_restarts(self, acceptance_seeds):
        """Test EM_is gains at least 0.2 mean ACC over EM at p = 10"""
        frame = run_sweep(
            GridSpec(K=[3], p=[10], cluster_size=[500], dp=[0.2], eta=[0.2]),
            [{"name": "em"}, {"name": "em_is"}],
            acceptance_seeds(100),
        )

        em = mean_acc(frame, "em_r0")
        em_is = mean_acc(frame, "em_is_r0")

        assert em_is >= 0.8
        assert em_is - em >= 0.2

    def test_restarts_help_em_is(self, acceptance_seeds):
        """Test ten recombinations improve EM_is and match EM multi-starts"""
        frame = run_sweep(
            GridSpec(K=[3], p=[30], cluster_size=[500], dp=[0.2], eta=[0.2]),
            [
                {"name": "em_is", "restarts": 0},
                {"name": "em_is", "restarts": 10},
                {"name": "em", "restarts": 10},
            ],
            acceptance_seeds(100),
        )

        with_restarts = mean_acc(frame, "em_is_r10")

        assert with_restarts >= mean_acc(frame, "em_is_r0") + 0.05
        assert with_restarts >= mean_acc(frame, "em_r10")

    def test_more_samples_help(self, acceptance_seeds):
        """Test N_k = 1000 beats N_k = 250 by 0.1 mean ACC for K = 4"""
        frame = run_sweep(
            GridSpec(K=[4], p=[30], cluster_size=[250, 1000], dp=[0.2], eta=[0.2]),
            [{"name": "em_is", "restarts": 10}],
            acceptance_seeds(50),
        )

        small = mean_acc(frame, "em_is_r10", N=1000)
        large = mean_acc(frame, "em_is_r10", N=4000)

        assert large - small >= 0.1


class TestTwoClusterResolvability:
    """Mean ACC follows fitted-model R for two clusters"""

    def test_acc_tracks_resolvability(self, acceptance_seeds):
        """Test per-bin mean ACC stays within 0.1 of the bin center R"""
        frame = run_sweep(
            GridSpec(
                K=[2],
                p=[5],
                cluster_size=[500],
                dp=[0.0, 0.3, 0.6, 0.9],
                eta=[0.1, 0.3, 0.6, 1.0],
            ),
            [{"name": "em_is"}],
            max(1, acceptance_seeds(200) // 16),
        )

        bins = r_vs_acc_bins(frame, edges=[0.8, 0.9, 1.0])
        checked = bins[bins["n"] >= 5]

        assert not checked.empty
        for _, row in checked.iterrows():
            assert abs(row["mean_acc"] - row["bin_center"]) <= 0.1, row.to_dict()


class TestRobustness:
    """Imbalanced and corrupted two-cluster problems"""

    def test_em_is_at_least_em(self, acceptance_seeds):
        """Test EM_is matches or beats EM in every split and corruption cell"""
        frame = run_sweep(
            GridSpec(
                proportions=[[1.0, 1.0], [9.0, 1.0]],
                total_n=1000,
                p=[5],
                dp=[0.2],
                eta=[0.1],
                corrupt_frac=[0.0, 0.1],
            ),
            [{"name": "em", "restarts": 10}, {"name": "em_is", "restarts": 10}],
            acceptance_seeds(50),
        )

        for split in ("1:1", "9:1"):
            for corrupt in (0.0, 0.1):
                cell = {"split": split, "corrupt_frac": corrupt}
                em = mean_acc(frame, "em_r10", **cell)
                em_is = mean_acc(frame, "em_is_r10", **cell)
                assert em_is >= em, cell
