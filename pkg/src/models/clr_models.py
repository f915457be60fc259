"""
Array-valued data structures shared by the generator, engines and metrics
References: docs/algorithms.md - Data model section
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.models.problem_models import ProblemSpec
from src.utils.clr_exceptions import ShapeMismatchError


def augment(X: np.ndarray) -> np.ndarray:
    """Return the augmented design [1, X]."""
    X = np.asarray(X, dtype=float)
    return np.column_stack([np.ones(X.shape[0]), X])


@dataclass
class Dataset:
    """Observations of p predictors and a response, optionally labelled"""

    X: np.ndarray
    y: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1)
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int).ravel()

        if self.X.ndim != 2 or self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ShapeMismatchError(
                f"X must be a non-empty matrix, got {self.X.shape}"
            )
        if self.X.shape[0] != self.y.shape[0]:
            raise ShapeMismatchError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]}"
            )
        if self.labels is not None and self.labels.shape[0] != self.y.shape[0]:
            raise ShapeMismatchError(
                f"labels has {self.labels.shape[0]} rows but y has {self.y.shape[0]}"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ShapeMismatchError("Dataset entries must be finite")

    @property
    def N(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def xtil(self) -> np.ndarray:
        """Augmented design, built on demand"""
        return augment(self.X)

    def subset(self, mask: np.ndarray) -> "Dataset":
        labels = self.labels[mask] if self.labels is not None else None
        return Dataset(X=self.X[mask], y=self.y[mask], labels=labels)


@dataclass
class GroundTruth:
    """True regression vectors, noise scales and labels of a generated problem"""

    beta: np.ndarray
    sigma: np.ndarray
    labels: np.ndarray
    spec: Optional[ProblemSpec] = None

    def __post_init__(self):
        self.beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        self.sigma = np.asarray(self.sigma, dtype=float).ravel()
        self.labels = np.asarray(self.labels, dtype=int).ravel()
        if self.beta.shape[0] != self.sigma.shape[0]:
            raise ShapeMismatchError(
                f"beta has {self.beta.shape[0]} clusters but sigma has "
                f"{self.sigma.shape[0]}"
            )
        if not np.all(self.sigma > 0):
            raise ValueError(f"True sigma must be positive, got {self.sigma.tolist()}")

    @property
    def K(self) -> int:
        return int(self.beta.shape[0])

    @property
    def corrupted(self) -> np.ndarray:
        """Boolean mask of rows whose response was replaced"""
        return self.labels < 0


@dataclass
class CLRModel:
    """Fitted clusterwise regression model"""

    beta: np.ndarray
    sigma: np.ndarray
    weights: Optional[np.ndarray] = None
    mix: Optional[np.ndarray] = None

    def __post_init__(self):
        self.beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        self.sigma = np.asarray(self.sigma, dtype=float).ravel()
        if self.beta.shape[0] != self.sigma.shape[0]:
            raise ShapeMismatchError(
                f"beta has {self.beta.shape[0]} clusters but sigma has "
                f"{self.sigma.shape[0]}"
            )
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.ndim != 2 or self.weights.shape[1] != self.K:
                raise ShapeMismatchError(
                    f"weights must be N x {self.K}, got {self.weights.shape}"
                )
            if self.mix is None:
                self.mix = self.weights.mean(axis=0)
        if self.mix is None:
            self.mix = np.full(self.K, 1.0 / self.K)
        self.mix = np.asarray(self.mix, dtype=float).ravel()

    @property
    def K(self) -> int:
        return int(self.beta.shape[0])

    @property
    def p(self) -> int:
        return int(self.beta.shape[1] - 1)

    def predictions(self, X: np.ndarray) -> np.ndarray:
        """Per-cluster predictions X̃ β_k as an N x K matrix"""
        return augment(X) @ self.beta.T

    def copy(self) -> "CLRModel":
        return CLRModel(
            beta=self.beta.copy(),
            sigma=self.sigma.copy(),
            weights=None if self.weights is None else self.weights.copy(),
            mix=self.mix.copy(),
        )


@dataclass
class FitResult:
    """Outcome of one EM or EM_is fit"""

    best_model: CLRModel
    best_error: float
    error_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    restarts_used: int = 0
    revival_events: int = 0
    wall_time: float = 0.0
    algorithm: str = "em"
    converged: bool = False
    failed: bool = False
    failure: Optional[str] = None
    sigma_floor_hits: int = 0
    elite: List[Any] = field(default_factory=list)

    def summary(self) -> Dict[str, Any]:
        """Scalar fields suitable for JSON records"""
        return {
            "algorithm": self.algorithm,
            "best_error": float(self.best_error),
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "revival_events": self.revival_events,
            "wall_time": self.wall_time,
            "converged": self.converged,
            "failed": self.failed,
            "failure": self.failure,
            "sigma_floor_hits": self.sigma_floor_hits,
        }


@dataclass
class ResolvabilityReport:
    """Global and pairwise resolvability of a model on observed predictors"""

    R_global: float
    R_pairwise: np.ndarray
    Z_norm: float
    per_pair_labels: List[Tuple[int, int]]


@dataclass
class ClusterDensityModel:
    """Weighted Gaussian fit of X per cluster"""

    means: np.ndarray
    covariances: np.ndarray
    mix: np.ndarray
    active: np.ndarray

    @property
    def K(self) -> int:
        return int(self.means.shape[0])


@dataclass
class Prediction:
    """Per-cluster predictions and membership probabilities at one point"""

    per_cluster_yhat: np.ndarray
    probs: np.ndarray
    xp: float
    coerced: float
    weighted: float
    underflow: bool = False
