"""
Result tables and plot-ready aggregates of benchmark sweeps.

Writes the long-form results CSV (one row per cell, replicate and
algorithm), per-cell aggregates, one plot-data file per panel and the
binned resolvability-versus-accuracy table for two-cluster problems.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.batch.batch_processor import ResultRecord

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "cell_index",
    "cell_key",
    "K",
    "p",
    "split",
    "N",
    "dp",
    "eta",
    "delta",
    "corrupt_frac",
    "replicate",
    "seed",
    "fit_seed",
    "algorithm",
    "restarts",
    "series",
    "acc",
    "rmse_weighted",
    "R_global",
    "R_true",
    "iterations",
    "restarts_used",
    "revival_events",
    "wall_time",
    "converged",
    "failed",
    "failure",
]

CELL_COLUMNS = [
    "cell_index",
    "cell_key",
    "K",
    "p",
    "split",
    "N",
    "dp",
    "eta",
    "delta",
    "corrupt_frac",
]

AGGREGATE_COLUMNS = CELL_COLUMNS + [
    "series",
    "n",
    "n_failed",
    "mean_acc",
    "median_acc",
    "q25_acc",
    "q75_acc",
    "mean_rmse",
    "mean_R",
    "mean_iterations",
    "mean_wall_time",
]

PLOT_COLUMNS = ["series", "x", "mean_acc", "median_acc", "q25", "q75", "n"]

BIN_COLUMNS = ["series", "bin_low", "bin_high", "bin_center", "mean_acc", "mean_R", "n"]

PANEL_CANDIDATES = ["K", "p", "split", "dp", "eta", "delta", "corrupt_frac"]

# Axes that determine other columns: N_k fixes split, split fixes K
AXIS_IMPLIES = {"N_k": {"split"}, "split": {"split", "K"}}


def records_frame(records: Sequence[ResultRecord]) -> pd.DataFrame:
    """Long-form results with R_pairwise spread over rp_1..rp_C"""
    n_pairs = max((len(r.R_pairwise) for r in records), default=0)
    columns = RESULT_COLUMNS + [f"rp_{i + 1}" for i in range(n_pairs)]
    if not records:
        return pd.DataFrame(columns=columns)
    return pd.DataFrame([r.to_row(n_pairs) for r in records], columns=columns)


def aggregate(frame: pd.DataFrame) -> pd.DataFrame:
    """Per cell and series statistics; ACC quantiles skip failed fits"""
    if frame.empty:
        return pd.DataFrame(columns=AGGREGATE_COLUMNS)

    rows = []
    keys_columns = CELL_COLUMNS + ["series"]
    for keys, group in frame.groupby(keys_columns, sort=True, dropna=False):
        ok = group[~group["failed"].astype(bool)]
        accs = ok["acc"].astype(float)
        row = dict(zip(keys_columns, keys))
        row.update(
            {
                "n": len(group),
                "n_failed": int(group["failed"].astype(bool).sum()),
                "mean_acc": accs.mean(),
                "median_acc": accs.median(),
                "q25_acc": accs.quantile(0.25),
                "q75_acc": accs.quantile(0.75),
                "mean_rmse": ok["rmse_weighted"].astype(float).mean(),
                "mean_R": ok["R_global"].astype(float).mean(),
                "mean_iterations": group["iterations"].astype(float).mean(),
                "mean_wall_time": group["wall_time"].astype(float).mean(),
            }
        )
        rows.append(row)
    table = pd.DataFrame(rows, columns=AGGREGATE_COLUMNS)
    table = table.sort_values(["cell_index", "series"], kind="stable")
    return table.reset_index(drop=True)


def _panel_columns(aggregates: pd.DataFrame, plot_x: str) -> List[str]:
    excluded = AXIS_IMPLIES.get(plot_x, {plot_x})
    return [
        c
        for c in PANEL_CANDIDATES
        if c not in excluded and aggregates[c].nunique() > 1
    ]


def _x_values(table: pd.DataFrame, plot_x: str) -> pd.Series:
    if plot_x == "N_k":
        return (table["N"] // table["K"]).astype(int)
    return table[plot_x]


def plot_data(aggregates: pd.DataFrame, plot_x: str = "p") -> Dict[str, pd.DataFrame]:
    """
    One table per panel with x = plot_x and series = algorithm/restarts.

    Panels are the combinations of every other grid axis that varies.
    """
    if aggregates.empty:
        return {"all": pd.DataFrame(columns=PLOT_COLUMNS)}

    panel_columns = _panel_columns(aggregates, plot_x)
    groups = (
        aggregates.groupby(panel_columns, sort=True)
        if panel_columns
        else [((), aggregates)]
    )

    panels = {}
    for keys, group in groups:
        keys = keys if isinstance(keys, tuple) else (keys,)
        name = "_".join(f"{c}{v}" for c, v in zip(panel_columns, keys)) or "all"
        table = group.rename(columns={"q25_acc": "q25", "q75_acc": "q75"})
        table = table.assign(x=_x_values(table, plot_x))[PLOT_COLUMNS]
        table = table.sort_values(["series", "x"], kind="stable")
        panels[name] = table.reset_index(drop=True)
    return panels


def r_vs_acc_bins(
    frame: pd.DataFrame, edges: Optional[Sequence[float]] = None
) -> pd.DataFrame:
    """
    Mean ACC per bin of fitted-model resolvability for two-cluster fits.

    The last bin is closed on the right so R = 1 is counted.
    """
    edges = np.asarray(edges if edges is not None else np.linspace(0.0, 1.0, 11))
    if frame.empty:
        return pd.DataFrame(columns=BIN_COLUMNS)

    two = frame[(frame["K"] == 2) & ~frame["failed"].astype(bool)]
    rows = []
    for series, group in two.groupby("series", sort=True):
        r_values = group["R_global"].astype(float).to_numpy()
        acc_values = group["acc"].astype(float).to_numpy()
        for i, (low, high) in enumerate(zip(edges[:-1], edges[1:])):
            last = i == len(edges) - 2
            upper = (r_values <= high) if last else (r_values < high)
            mask = (r_values >= low) & upper
            if not mask.any():
                continue
            rows.append(
                {
                    "series": series,
                    "bin_low": low,
                    "bin_high": high,
                    "bin_center": 0.5 * (low + high),
                    "mean_acc": float(acc_values[mask].mean()),
                    "mean_R": float(r_values[mask].mean()),
                    "n": int(mask.sum()),
                }
            )
    return pd.DataFrame(rows, columns=BIN_COLUMNS)


def write_sweep_outputs(
    records: Sequence[ResultRecord], out_dir: Path, plot_x: str = "p"
) -> Dict[str, Path]:
    """
    Write results.csv, aggregates.csv, plot_<panel>.csv and r_vs_acc.csv.

    An empty sweep produces header-only files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frame = records_frame(records)
    aggregates = aggregate(frame)
    paths = {
        "results": out_dir / "results.csv",
        "aggregates": out_dir / "aggregates.csv",
        "r_vs_acc": out_dir / "r_vs_acc.csv",
    }
    frame.to_csv(paths["results"], index=False)
    aggregates.to_csv(paths["aggregates"], index=False)
    r_vs_acc_bins(frame).to_csv(paths["r_vs_acc"], index=False)

    for panel, table in plot_data(aggregates, plot_x).items():
        path = out_dir / f"plot_{panel}.csv"
        table.to_csv(path, index=False)
        paths[f"plot_{panel}"] = path

    logger.info(
        f"Wrote {len(frame)} result rows and {len(aggregates)} aggregates to {out_dir}"
    )
    return paths
