"""
Sweep and fit configuration loaded from YAML files and the environment.

A sweep is a grid over problem-class parameters, a list of algorithms with
their restart budgets and a number of independent problems per grid cell.
Every random seed in a sweep is derived from the base seed, the cell and
the replicate index, so reruns reproduce every result.

References:
    - docs/algorithms.md: Benchmark harness
    - src/batch/batch_processor.py: consumer of the expanded cells
"""

import hashlib
import itertools
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.problem_models import EliteParams, EMConfig, SplitParams, split_sizes
from src.utils.clr_exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 63) - 1

PlotAxis = Literal["p", "K", "N_k", "split", "dp", "eta", "delta", "corrupt_frac"]


def derive_seed(base_seed: int, *parts: Any) -> int:
    """Seed from SHA-256 of the canonical JSON of (base_seed, *parts), 63 bits."""
    canonical = json.dumps([base_seed, *parts], sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canonical.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & SEED_MASK


def config_hash(config: BaseModel) -> str:
    """SHA-256 hex digest of a configuration's canonical JSON."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class AlgorithmSpec(BaseModel):
    """One algorithm series of a sweep"""

    model_config = ConfigDict(extra="forbid")

    name: Literal["em", "em_is"]
    restarts: int = Field(0, ge=0)

    @property
    def label(self) -> str:
        return f"{self.name}_r{self.restarts}"


class GridCell(BaseModel):
    """One combination of problem-class parameters"""

    index: int
    K: int
    p: int
    cluster_sizes: List[int]
    split_label: str
    dp: float
    eta: float
    delta: float
    corrupt_frac: float

    @property
    def key(self) -> str:
        """Canonical identifier used for seeding and aggregation"""
        return (
            f"K={self.K}|p={self.p}|sizes={self.split_label}|dp={self.dp}|"
            f"eta={self.eta}|delta={self.delta}|corrupt={self.corrupt_frac}"
        )

    def axis_value(self, axis: str) -> Union[int, float, str]:
        if axis == "split":
            return self.split_label
        if axis == "N_k":
            return self.cluster_sizes[0]
        return getattr(self, axis)


class GridSpec(BaseModel):
    """Axes of the sweep grid; an empty axis yields an empty sweep"""

    model_config = ConfigDict(extra="forbid")

    K: List[int] = Field(default_factory=lambda: [2])
    p: List[int] = Field(default_factory=lambda: [5])
    cluster_size: Optional[List[int]] = None
    proportions: Optional[List[List[float]]] = None
    total_n: Optional[int] = Field(None, gt=0)
    dp: List[float] = Field(default_factory=lambda: [0.2])
    eta: List[float] = Field(default_factory=lambda: [0.2])
    delta: List[float] = Field(default_factory=lambda: [0.0])
    corrupt_frac: List[float] = Field(default_factory=lambda: [0.0])

    @model_validator(mode="after")
    def one_size_axis(self):
        """Ensure cluster sizes come either from N_k or from proportions"""
        if self.proportions is not None:
            if self.cluster_size is not None:
                raise ValueError("Give either cluster_size or proportions, not both")
            if self.total_n is None:
                raise ValueError("proportions require total_n")
        elif self.cluster_size is None:
            self.cluster_size = [500]
        return self

    def _size_axis(self) -> List[Dict[str, Any]]:
        if self.proportions is not None:
            axis = []
            for shares in self.proportions:
                sizes = split_sizes(shares, self.total_n)
                label = ":".join(f"{s:g}" for s in shares)
                axis.append(
                    {"K": len(shares), "cluster_sizes": sizes, "split_label": label}
                )
            return axis
        return [
            {"K": K, "cluster_sizes": [n] * K, "split_label": str(n)}
            for K, n in itertools.product(self.K, self.cluster_size)
        ]

    def cells(self) -> List[GridCell]:
        """Every grid cell in deterministic order"""
        cells = []
        for size, p, dp, eta, delta, corrupt in itertools.product(
            self._size_axis(), self.p, self.dp, self.eta, self.delta, self.corrupt_frac
        ):
            cells.append(
                GridCell(
                    index=len(cells),
                    p=p,
                    dp=dp,
                    eta=eta,
                    delta=delta,
                    corrupt_frac=corrupt,
                    **size,
                )
            )
        return cells


class FitSettings(BaseModel):
    """Engine, split and elite parameters shared by fits"""

    model_config = ConfigDict(extra="forbid")

    em: Dict[str, Any] = Field(default_factory=dict)
    split: SplitParams = Field(default_factory=SplitParams)
    elite: EliteParams = Field(default_factory=EliteParams)

    @field_validator("em")
    @classmethod
    def em_overrides_valid(cls, v):
        """Ensure the overrides are EMConfig fields other than K and seed"""
        reserved = {"K", "seed"} & set(v)
        if reserved:
            raise ValueError(
                f"K and seed are set per fit, not in em: {sorted(reserved)}"
            )
        EMConfig(K=1, **v)
        return v

    def em_config(self, K: int, seed: int) -> EMConfig:
        return EMConfig(K=K, seed=seed, **self.em)


class SweepConfig(FitSettings):
    """Full benchmark sweep definition"""

    name: str = "sweep"
    grid: GridSpec = Field(default_factory=GridSpec)
    algorithms: List[AlgorithmSpec] = Field(
        default_factory=lambda: [AlgorithmSpec(name="em"), AlgorithmSpec(name="em_is")]
    )
    problems_per_cell: int = Field(10, ge=0)
    base_seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)
    plot_x: PlotAxis = "p"
    norm_mode: Literal["cluster", "global"] = "cluster"

    @field_validator("algorithms")
    @classmethod
    def unique_series(cls, v):
        """Ensure no algorithm series is listed twice"""
        labels = [spec.label for spec in v]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Duplicate algorithm series: {labels}")
        return v


def _load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    try:
        with path.open(encoding="utf-8") as handle:
            raw = yaml.safe_load(handle) or {}
    except yaml.YAMLError as e:
        raise DatasetFormatError(str(path), f"invalid YAML: {e}") from e
    if not isinstance(raw, dict):
        raise DatasetFormatError(str(path), "top level must be a mapping")
    return raw


def load_sweep_config(path: Union[str, Path]) -> SweepConfig:
    """
    Load and validate a sweep definition.

    Raises:
        FileNotFoundError: If the file does not exist
        DatasetFormatError: If the YAML cannot be parsed
        pydantic.ValidationError: If the values are invalid
    """
    config = SweepConfig.model_validate(_load_yaml(path))
    logger.info(
        f"Loaded sweep '{config.name}': {len(config.grid.cells())} cells, "
        f"{len(config.algorithms)} algorithms, "
        f"{config.problems_per_cell} problems per cell"
    )
    return config


def load_fit_settings(path: Optional[Union[str, Path]]) -> FitSettings:
    """Fit settings from a YAML file with optional em, split and elite sections."""
    if path is None:
        return FitSettings()
    return FitSettings.model_validate(_load_yaml(path))


class BenchSettings(BaseModel):
    """
    Process-level settings read from the environment.

    Unset workers defer to the sweep config.
    """

    workers: Optional[int] = Field(None, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    out_dir: Path = Path("results")

    @classmethod
    def from_environment(cls) -> "BenchSettings":
        """Create settings from CLR_WORKERS, CLR_LOG_LEVEL and CLR_OUT_DIR"""
        try:
            from dotenv import load_dotenv

            load_dotenv()
        except ImportError:
            logger.debug("python-dotenv not installed, using process environment only")

        workers = os.getenv("CLR_WORKERS")
        return cls(
            workers=int(workers) if workers else None,
            log_level=os.getenv("CLR_LOG_LEVEL", "WARNING").upper(),
            out_dir=Path(os.getenv("CLR_OUT_DIR", "results")),
        )
