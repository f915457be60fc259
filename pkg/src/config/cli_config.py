"""
Validation of parsed command-line arguments and run provenance.

Each subcommand declares which arguments name input files. Missing inputs
are tracked apart from other problems because the CLI reports them with
their own exit code. Execution metadata echoes the full configuration for
fit records; provenance metadata identifies inputs by content so that
model files stay reproducible.

References:
    - main.py: CLRBenchCLI subcommands
    - src/config/sweep_config.py: YAML-backed fit and sweep settings
"""

import argparse
import hashlib
import logging
import os
import platform
import sys
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)

CLI_VERSION = "1.0.0"

# Argument names that hold input files, per subcommand
INPUT_PATH_ARGS: Dict[str, List[Tuple[str, str]]] = {
    "gen": [("config", "Sweep config")],
    "fit": [
        ("data", "Dataset"),
        ("truth", "Truth file"),
        ("config", "Fit settings"),
    ],
    "bench": [("config", "Sweep config")],
    "metrics": [
        ("model", "Model file"),
        ("data", "Dataset"),
        ("truth", "Truth file"),
        ("density", "Density file"),
    ],
    "predict": [
        ("model", "Model file"),
        ("density", "Density file"),
        ("x", "Predictor rows"),
    ],
}

# Lower bounds of the integer flags shared by the subcommands
PARAMETER_MINIMUMS = {
    "workers": 1,
    "seed": 0,
    "restarts": 0,
    "clusters": 1,
    "problems": 0,
}


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes"""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class CLIConfiguration:
    """
    Validate parsed arguments for one subcommand.

    Attributes:
        args: Parsed argparse namespace
        validated: Result of the last validate_all call
        validation_errors: Messages collected by the checks
        missing_paths: Input files that do not exist
    """

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.validated = False
        self.validation_errors: List[str] = []
        self.missing_paths: List[Path] = []

    @property
    def command(self) -> str:
        return getattr(self.args, "command", "") or ""

    def _reject(self, message: str) -> bool:
        self.validation_errors.append(message)
        logger.error(message)
        return False

    def _given_inputs(self) -> List[Tuple[str, str, Path]]:
        inputs = []
        for attr_name, description in INPUT_PATH_ARGS.get(self.command, []):
            path = getattr(self.args, attr_name, None)
            if path is not None:
                inputs.append((attr_name, description, Path(path)))
        return inputs

    def validate_input_paths(self) -> bool:
        """
        Check that every given input is an existing, readable file.

        Returns:
            bool: True if all inputs can be read
        """
        results = []
        for _, description, path in self._given_inputs():
            if not path.exists():
                self.missing_paths.append(path)
                results.append(self._reject(f"File not found: {path}"))
            elif not path.is_file():
                results.append(self._reject(f"{description} is not a file: {path}"))
            elif not os.access(path, os.R_OK):
                results.append(self._reject(f"{description} is not readable: {path}"))
        return all(results)

    def validate_output_path(self) -> bool:
        """Create the output directory and check it with a temporary file."""
        out_dir = Path(self.args.out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            with tempfile.TemporaryFile(dir=out_dir):
                pass
        except OSError as e:
            return self._reject(f"Cannot write to output directory {out_dir}: {e}")
        logger.debug(f"Output directory ready: {out_dir}")
        return True

    def validate_execution_parameters(self) -> bool:
        """
        Check integer flags against their minimums and the profile grid.

        Returns:
            bool: True if every given value is in range
        """
        results = []
        for name, minimum in PARAMETER_MINIMUMS.items():
            value = getattr(self.args, name, None)
            if value is not None and value < minimum:
                results.append(
                    self._reject(f"--{name} must be at least {minimum}: {value}")
                )

        workers = getattr(self.args, "workers", None)
        cpus = os.cpu_count() or 1
        if workers is not None and workers > cpus:
            logger.warning(f"More workers than CPUs requested: {workers} > {cpus}")

        profile = getattr(self.args, "profile", None)
        if profile is not None:
            start, stop, num = profile
            if stop <= start or num < 2:
                results.append(
                    self._reject(
                        f"--profile needs START < STOP and NUM >= 2: {profile}"
                    )
                )
        return all(results)

    def validate_all(self) -> bool:
        """
        Run every check, collecting all errors instead of stopping at the first.

        Returns:
            bool: True if all checks pass
        """
        self.validation_errors.clear()
        self.missing_paths.clear()

        checks: Dict[str, Callable[[], bool]] = {
            "input paths": self.validate_input_paths,
            "output path": self.validate_output_path,
            "execution parameters": self.validate_execution_parameters,
        }
        failed = []
        for name, check in checks.items():
            try:
                passed = check()
            except Exception as e:
                passed = self._reject(f"{name} check raised: {e}")
            if not passed:
                failed.append(name)

        self.validated = not failed
        if failed:
            logger.error(f"❌ Validation failed for {', '.join(failed)}")
        else:
            logger.info("✅ Arguments validated")
        return self.validated

    def create_execution_metadata(self) -> Dict[str, Any]:
        """Version, timestamp, interpreter and the echoed configuration."""
        configuration = {
            key: str(value) if isinstance(value, Path) else value
            for key, value in sorted(vars(self.args).items())
        }
        return {
            "cli_version": CLI_VERSION,
            "execution_timestamp": datetime.now().isoformat(),
            "system_info": {
                "python_version": sys.version,
                "platform": platform.platform(),
                "cwd": str(Path.cwd()),
            },
            "configuration": configuration,
        }

    def provenance_metadata(self) -> Dict[str, Any]:
        """
        Run-independent metadata for model files.

        Inputs are identified by name and content digest, so repeated runs
        with the same inputs and seed write identical files.
        """
        inputs: Dict[str, Optional[Dict[str, str]]] = {}
        for attr_name, _, path in self._given_inputs():
            if path.is_file():
                inputs[attr_name] = {"name": path.name, "sha256": file_digest(path)}
        return {"cli_version": CLI_VERSION, "command": self.command, "inputs": inputs}

    def get_validation_summary(self) -> Dict[str, Any]:
        return {
            "validated": self.validated,
            "errors": list(self.validation_errors),
            "error_count": len(self.validation_errors),
            "missing_paths": [str(p) for p in self.missing_paths],
        }
