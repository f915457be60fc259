#!/usr/bin/env python3
"""
Command-Line Interface for the Clusterwise Regression Toolkit

Generates synthetic clusterwise linear regression problems, fits them with
plain EM or EM with intelligent subspace proposals (EM_is), scores models
with resolvability, ACC and RMSE, predicts with per-cluster densities and
runs parallel benchmark sweeps that write plot-ready aggregates.

Features:
    - gen: problem suites from a sweep grid, or the three-cluster demo
    - fit: one dataset, one engine; writes model, density and fit record
    - bench: full sweep with a worker pool, results and aggregate CSVs
    - metrics: R, pairwise R, RMSE and (with truth) ACC for a model
    - predict: K predictions, probabilities and XP per row or along a grid

Usage:
    python main.py gen --config sweep.yaml --out-dir problems
    python main.py fit --data problems/cell000_rep000.csv -k 2 --algorithm em_is
    python main.py bench --config sweep.yaml --workers 4 --out-dir results
    python main.py metrics --model results/model.json --data data.csv
    python main.py predict --model model.json --density density.json --x rows.csv

Exit codes:
    0 success (individual fit failures are recorded, not fatal)
    1 invalid configuration or input contents
    2 missing input file

References:
    - docs/algorithms.md: engines, metrics and file formats
    - src/config/: CLI validation and YAML settings
"""

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv

    load_dotenv()
except ImportError:
    # python-dotenv not installed, continue without it
    pass

from src.batch.batch_processor import SweepRunner, generate_suite
from src.config.cli_config import CLIConfiguration
from src.config.sweep_config import (
    BenchSettings,
    SweepConfig,
    config_hash,
    load_fit_settings,
    load_sweep_config,
)
from src.data.dataset_io import (
    read_dataset,
    read_density,
    read_model,
    read_predictors,
    read_truth,
    write_dataset,
    write_density,
    write_model,
    write_truth,
)
from src.data.generator import three_cluster_prediction_instance
from src.engine.em_engine import fit
from src.engine.trace import JsonlTraceWriter
from src.metrics.accuracy import acc, rmse
from src.metrics.resolvability import resolvability_report
from src.models.clr_models import ClusterDensityModel, CLRModel, Dataset, GroundTruth
from src.models.document_models import Provenance
from src.monitoring.performance_monitor import SweepMonitor
from src.predict.predictor import fit_density, predict_batch, xp_profile
from src.reports.sweep_reports import write_sweep_outputs
from src.utils.clr_exceptions import CLRError, ShapeMismatchError, classify_fit_error
from src.utils.numeric_warnings import quiet_library_loggers, suppress_numeric_warnings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_MISSING_FILE = 2


def _write_json(payload: Dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=str), encoding="utf-8")
    return path


def _model_scores(
    ds: Dataset,
    model: CLRModel,
    truth: Optional[GroundTruth] = None,
    density: Optional[ClusterDensityModel] = None,
    norm_mode: str = "cluster",
) -> Dict[str, Any]:
    """Resolvability, RMSE and optional ACC of a model on a dataset"""
    if model.p != ds.p:
        raise ShapeMismatchError(f"Model has p={model.p}, dataset has p={ds.p}")

    scores: Dict[str, Any] = {"K": model.K, "p": model.p, "N": ds.N}
    if model.K >= 2 and np.all(model.sigma > 0):
        report = resolvability_report(ds.X, model.beta, model.sigma)
        scores["R_global"] = report.R_global
        scores["R_pairwise"] = [float(v) for v in report.R_pairwise]
        scores["R_pairs"] = [[int(a), int(b)] for a, b in report.per_pair_labels]
        scores["Z_norm"] = report.Z_norm
    else:
        logger.warning("Resolvability needs K >= 2 and positive sigma; skipped")

    covered = model.weights is not None and model.weights.shape[0] == ds.N
    if density is not None or covered:
        scores["rmse_weighted"] = rmse(ds, model, "weighted", density=density)
        scores["rmse_coerced"] = rmse(ds, model, "coerced", density=density)
    else:
        logger.warning("No weights or density for this dataset; RMSE skipped")

    if truth is not None:
        scores["acc"] = acc(model.beta, truth.beta, norm_mode)
    return scores


class CLRBenchCLI:
    """
    Command-line interface for the clusterwise regression toolkit.

    Attributes:
        config: CLI configuration and validation for the parsed arguments
        settings: Process-level settings from the environment
        monitor: Resource monitor used by bench runs
    """

    def __init__(self):
        """Initialize the CLI with environment settings."""
        self.config: Optional[CLIConfiguration] = None
        self.settings = BenchSettings()
        self.monitor: Optional[SweepMonitor] = None

    def setup_argument_parser(self) -> argparse.ArgumentParser:
        """
        Configure and return the argument parser for CLI options.

        Returns:
            Configured ArgumentParser instance with all subcommands
        """
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument(
            "--seed", type=int, default=None, help="Base seed (default: 0)"
        )
        common.add_argument(
            "--workers",
            type=int,
            default=None,
            help="Worker processes (default: CLR_WORKERS or the sweep config)",
        )
        common.add_argument(
            "--out-dir",
            type=Path,
            default=None,
            help="Output directory (default: CLR_OUT_DIR or results)",
        )
        common.add_argument(
            "--config", type=Path, default=None, help="YAML sweep or fit settings"
        )
        common.add_argument(
            "--verbose", action="store_true", help="Enable debug logging"
        )

        parser = argparse.ArgumentParser(
            description="Clusterwise Regression Toolkit - EM and EM_is benchmarks",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  python main.py gen --config sweep.yaml           # Write one CSV + truth per problem
  python main.py gen --demo                        # Three-cluster prediction demo
  python main.py fit --data d.csv -k 3 --restarts 10
  python main.py bench --config sweep.yaml --workers 4
  python main.py metrics --model model.json --data d.csv --truth d.truth.json
  python main.py predict --model model.json --density density.json --profile -4 4 81
            """,
        )
        subparsers = parser.add_subparsers(dest="command", required=True)

        gen = subparsers.add_parser(
            "gen", parents=[common], help="Generate problem suites"
        )
        gen.add_argument(
            "--demo",
            action="store_true",
            help="Write the three-cluster one-dimensional prediction instance",
        )
        gen.add_argument(
            "--n-total", type=int, default=3000, help="Demo size (default: 3000)"
        )
        gen.add_argument(
            "--problems", type=int, default=None, help="Override problems_per_cell"
        )

        fit_parser = subparsers.add_parser(
            "fit", parents=[common], help="Fit one dataset"
        )
        fit_parser.add_argument("--data", type=Path, required=True, help="Dataset CSV")
        fit_parser.add_argument(
            "--algorithm",
            choices=["em", "em_is"],
            default="em_is",
            help="Engine (default: em_is)",
        )
        fit_parser.add_argument(
            "--restarts",
            type=int,
            default=0,
            help="Multi-starts for em, recombination budget for em_is",
        )
        fit_parser.add_argument(
            "-k",
            "--clusters",
            type=int,
            default=None,
            help="Number of clusters (default: taken from --truth)",
        )
        fit_parser.add_argument(
            "--truth", type=Path, default=None, help="Truth JSON for ACC"
        )
        fit_parser.add_argument(
            "--trace", type=Path, default=None, help="Write a JSONL iteration trace"
        )
        fit_parser.add_argument(
            "--save-weights",
            action="store_true",
            help="Store membership weights in the model file",
        )
        fit_parser.add_argument(
            "--norm-mode", choices=["cluster", "global"], default="cluster"
        )

        bench = subparsers.add_parser(
            "bench", parents=[common], help="Run a benchmark sweep"
        )
        bench.add_argument(
            "--problems", type=int, default=None, help="Override problems_per_cell"
        )
        bench.add_argument(
            "--plot-x",
            choices=["p", "K", "N_k", "split", "dp", "eta", "delta", "corrupt_frac"],
            default=None,
            help="x axis of the plot-data files (default: from the config)",
        )

        metrics = subparsers.add_parser(
            "metrics", parents=[common], help="Score a model on a dataset"
        )
        metrics.add_argument("--model", type=Path, required=True, help="Model JSON")
        metrics.add_argument("--data", type=Path, required=True, help="Dataset CSV")
        metrics.add_argument(
            "--truth", type=Path, default=None, help="Truth JSON; adds ACC"
        )
        metrics.add_argument(
            "--density",
            type=Path,
            default=None,
            help="Density JSON for out-of-sample RMSE",
        )
        metrics.add_argument(
            "--norm-mode", choices=["cluster", "global"], default="cluster"
        )

        predict_parser = subparsers.add_parser(
            "predict", parents=[common], help="Predict with a fitted model"
        )
        predict_parser.add_argument(
            "--model", type=Path, required=True, help="Model JSON"
        )
        predict_parser.add_argument(
            "--density", type=Path, required=True, help="Density JSON"
        )
        predict_parser.add_argument(
            "--x", type=Path, default=None, help="CSV of predictor rows"
        )
        predict_parser.add_argument(
            "--profile",
            type=float,
            nargs=3,
            metavar=("START", "STOP", "NUM"),
            default=None,
            help="XP profile over an evenly spaced grid (p = 1 only)",
        )

        return parser

    def apply_settings(self, args: argparse.Namespace) -> argparse.Namespace:
        """Fill unset flags from the environment settings"""
        if args.out_dir is None:
            args.out_dir = self.settings.out_dir
        if args.workers is None:
            args.workers = self.settings.workers
        return args

    def configure_logging(self, verbose: bool) -> None:
        level = logging.DEBUG if verbose else getattr(logging, self.settings.log_level)
        logging.basicConfig(
            level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
        )
        quiet_library_loggers()
        if verbose:
            print("🔊 Verbose mode enabled")

    def load_sweep(self, args: argparse.Namespace) -> SweepConfig:
        """Sweep config from --config (or defaults) with CLI overrides applied"""
        config = load_sweep_config(args.config) if args.config else SweepConfig()
        overrides: Dict[str, Any] = {}
        if args.seed is not None:
            overrides["base_seed"] = args.seed
        if args.workers is not None:
            overrides["workers"] = args.workers
        if getattr(args, "problems", None) is not None:
            overrides["problems_per_cell"] = args.problems
        if getattr(args, "plot_x", None) is not None:
            overrides["plot_x"] = args.plot_x
        if not overrides:
            return config
        return SweepConfig.model_validate({**config.model_dump(), **overrides})

    def generate(self, args: argparse.Namespace) -> Dict[str, List[str]]:
        """
        Write problem files for every grid cell and replicate, or the demo.

        Returns:
            Dict with the written "files" and per-cell "errors"
        """
        out_dir = args.out_dir
        if args.demo:
            print(f"🧪 Generating three-cluster demo with N={args.n_total}")
            ds, truth = three_cluster_prediction_instance(args.n_total, args.seed or 0)
            files = [
                str(write_dataset(ds, out_dir / "demo.csv")),
                str(write_truth(truth, out_dir / "demo.truth.json")),
            ]
            return {"files": files, "errors": []}

        sweep = self.load_sweep(args)
        cells = sweep.grid.cells()
        print(
            f"🧪 Generating {len(cells)} cells x {sweep.problems_per_cell} problems"
        )
        return generate_suite(sweep, out_dir)

    def fit_dataset(self, args: argparse.Namespace) -> Dict[str, Any]:
        """
        Fit one dataset and write model.json, density.json and fit_record.json.

        A failed fit is recorded with its failure code; no model is written.

        Returns:
            The fit record
        """
        ds = read_dataset(args.data)
        truth = read_truth(args.truth) if args.truth else None
        n_clusters = args.clusters or (truth.K if truth is not None else None)
        if n_clusters is None:
            raise ValueError(
                "Number of clusters unknown: pass -k/--clusters or --truth"
            )

        settings = load_fit_settings(args.config)
        seed = args.seed or 0
        cfg = settings.em_config(n_clusters, seed)

        print(
            f"🤖 Fitting K={n_clusters} on {ds.N} rows with {args.algorithm} "
            f"({args.restarts} restarts)"
        )
        record: Dict[str, Any] = {
            "data": str(args.data),
            "algorithm": args.algorithm,
            "restarts": args.restarts,
            "K": n_clusters,
            "seed": seed,
            "config_hash": config_hash(cfg),
            "settings_hash": config_hash(settings),
        }

        trace_context = JsonlTraceWriter(args.trace) if args.trace else nullcontext()
        try:
            with suppress_numeric_warnings(), trace_context as trace:
                result = fit(
                    ds,
                    args.algorithm,
                    cfg,
                    restarts=args.restarts,
                    split_params=settings.split,
                    elite_params=settings.elite,
                    trace=trace,
                )
        except Exception as e:
            record.update({"failed": True, "failure": classify_fit_error(e)})
            logger.error(f"Fit failed ({record['failure']}): {e}")
            _write_json(record, args.out_dir / "fit_record.json")
            return record

        record.update(result.summary())
        if result.failed:
            _write_json(record, args.out_dir / "fit_record.json")
            return record

        model = result.best_model
        with suppress_numeric_warnings():
            density = fit_density(ds, model)
            record.update(_model_scores(ds, model, truth, norm_mode=args.norm_mode))

        fit_summary = {k: v for k, v in result.summary().items() if k != "wall_time"}
        provenance = Provenance(
            seed=seed,
            config_hash=record["config_hash"],
            algorithm=args.algorithm,
            source=args.data.name,
            metadata={
                **self.config.provenance_metadata(),
                "settings_hash": record["settings_hash"],
                "restarts": args.restarts,
            },
        )
        write_model(
            model,
            args.out_dir / "model.json",
            include_weights=args.save_weights,
            provenance=provenance,
            fit=fit_summary,
            elite=[entry.to_dict() for entry in result.elite],
        )
        write_density(density, args.out_dir / "density.json")
        _write_json(
            {**record, "execution": self.config.create_execution_metadata()},
            args.out_dir / "fit_record.json",
        )
        return record

    def run_bench(self, args: argparse.Namespace) -> Dict[str, Path]:
        """
        Run the sweep and write results, aggregates, plot data and summary.

        Returns:
            Paths of every written file
        """
        sweep = self.load_sweep(args)
        self.monitor = SweepMonitor()
        runner = SweepRunner(sweep, workers=sweep.workers, monitor=self.monitor)

        print(
            f"⚡ Running sweep '{sweep.name}': {len(sweep.grid.cells())} cells, "
            f"{len(sweep.algorithms)} series, {runner.workers} worker(s)"
        )
        records = runner.run()
        paths = write_sweep_outputs(records, args.out_dir, sweep.plot_x)
        paths["summary"] = self.monitor.write_summary(
            args.out_dir / "sweep_summary.json",
            extra={
                "name": sweep.name,
                "config_hash": config_hash(sweep),
                "records": len(records),
                "failed": sum(1 for r in records if r.failed),
                "execution": self.config.create_execution_metadata(),
            },
        )
        return paths

    def score_model(self, args: argparse.Namespace) -> Dict[str, Any]:
        """
        Resolvability, RMSE and optional ACC of a model; written to metrics.json.
        """
        model = read_model(args.model)
        ds = read_dataset(args.data)
        truth = read_truth(args.truth) if args.truth else None
        density = read_density(args.density) if args.density else None

        with suppress_numeric_warnings():
            report = _model_scores(ds, model, truth, density, args.norm_mode)
        _write_json(report, args.out_dir / "metrics.json")
        print(json.dumps(report, indent=2))
        return report

    def predict_rows(self, args: argparse.Namespace) -> List[Path]:
        """
        Write predictions.csv for --x rows and profile.csv for --profile.

        Every file carries all K predictions, probabilities and XP.
        """
        if args.x is None and args.profile is None:
            raise ValueError("Nothing to predict: pass --x and/or --profile")

        model = read_model(args.model)
        density = read_density(args.density)
        if density.means.shape[1] != model.p:
            raise ShapeMismatchError(
                f"Density has p={density.means.shape[1]}, model has p={model.p}"
            )
        if density.K != model.K:
            raise ShapeMismatchError(
                f"Density has K={density.K}, model has K={model.K}"
            )

        written = []
        with suppress_numeric_warnings():
            if args.x is not None:
                X = read_predictors(args.x, model.p)
                path = args.out_dir / "predictions.csv"
                predict_batch(X, model, density).to_csv(path, index=False)
                written.append(path)
            if args.profile is not None:
                start, stop, num = args.profile
                grid = np.linspace(start, stop, int(num))
                path = args.out_dir / "profile.csv"
                xp_profile(grid, model, density).to_csv(path, index=False)
                written.append(path)
        return written

    def main(self, argv: Optional[List[str]] = None) -> int:
        """
        Main CLI execution flow with comprehensive error handling.

        Returns:
            Process exit code
        """
        parser = self.setup_argument_parser()
        args = parser.parse_args(argv)

        try:
            self.settings = BenchSettings.from_environment()
        except (ValidationError, ValueError) as e:
            print(f"❌ Invalid environment settings: {e}")
            return EXIT_INVALID

        self.configure_logging(args.verbose)
        args = self.apply_settings(args)
        self.config = CLIConfiguration(args)

        if not self.config.validate_all():
            for path in self.config.missing_paths:
                print(f"❌ File not found: {path}")
            if self.config.missing_paths:
                return EXIT_MISSING_FILE
            for error in self.config.validation_errors:
                print(f"❌ {error}")
            return EXIT_INVALID

        try:
            if args.command == "gen":
                result = self.generate(args)
                print(f"✅ Wrote {len(result['files'])} files to {args.out_dir}")
                for error in result["errors"]:
                    print(f"   ⚠️  {error}")
            elif args.command == "fit":
                record = self.fit_dataset(args)
                if record.get("failed"):
                    print(f"⚠️  Fit failed: {record.get('failure')}")
                else:
                    print(f"✅ Model written to {args.out_dir / 'model.json'}")
                    if "acc" in record:
                        print(f"📊 ACC: {record['acc']:.4f}")
            elif args.command == "bench":
                paths = self.run_bench(args)
                print(f"✅ Sweep outputs written to {args.out_dir}")
                print(f"📁 Results: {paths['results']}")
            elif args.command == "metrics":
                self.score_model(args)
            elif args.command == "predict":
                for path in self.predict_rows(args):
                    print(f"✅ Wrote {path}")
            return EXIT_OK

        except FileNotFoundError as e:
            print(f"❌ {e}")
            return EXIT_MISSING_FILE
        except ValidationError as e:
            print(f"❌ Invalid configuration: {e}")
            return EXIT_INVALID
        except CLRError as e:
            print(f"❌ {e}")
            return EXIT_INVALID
        except ValueError as e:
            print(f"❌ {e}")
            return EXIT_INVALID
        except KeyboardInterrupt:
            print("\n⚠️  Interrupted by user")
            return EXIT_INVALID
        except Exception as e:
            print(f"\n❌ Unexpected error: {str(e)}")
            if args.verbose:
                import traceback

                traceback.print_exc()
            return EXIT_INVALID


def main():
    """Entry point for the CLI application."""
    cli = CLRBenchCLI()
    sys.exit(cli.main())


if __name__ == "__main__":
    main()
