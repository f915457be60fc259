"""
Capped archive of the best distinct solutions seen by an EM_is run.

References:
    - docs/algorithms.md: Elite recombination
    - src/elite/recombination.py: consumer of the archive
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.metrics.matching import best_permutation
from src.models.clr_models import CLRModel
from src.models.problem_models import EliteParams
from src.utils.clr_exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


@dataclass
class EliteEntry:
    """One archived solution with its regression error and bookkeeping stats"""

    model: CLRModel
    error: float
    iterations: int = 0
    resolvability: Optional[float] = None
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def weights(self) -> np.ndarray:
        return self.model.weights

    def to_dict(self) -> Dict[str, Any]:
        """Serializable view without the membership weights"""
        return {
            "beta": self.model.beta.tolist(),
            "sigma": self.model.sigma.tolist(),
            "mix": self.model.mix.tolist(),
            "error": float(self.error),
            "iterations": self.iterations,
            "resolvability": self.resolvability,
            **self.stats,
        }


@dataclass
class EliteStore:
    """Entries sorted by ascending error, at most params.capacity of them"""

    params: EliteParams = field(default_factory=EliteParams)
    entries: List[EliteEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def best(self) -> Optional[EliteEntry]:
        return self.entries[0] if self.entries else None

    @property
    def worst_error(self) -> float:
        return self.entries[-1].error if self.entries else np.inf


def update_elite(store: EliteStore, candidate: EliteEntry) -> EliteStore:
    """
    Insert candidate if the store has room or it beats the worst entry.

    Args:
        store: Archive to update in place
        candidate: Solution with membership weights and regression error

    Returns:
        The same store, for chaining
    """
    if candidate.model.weights is None:
        raise ShapeMismatchError("Elite entries need membership weights")
    if not np.isfinite(candidate.error):
        return store

    full = len(store.entries) >= store.params.capacity
    if full and candidate.error >= store.worst_error:
        return store

    store.entries.append(candidate)
    store.entries.sort(key=lambda entry: entry.error)
    if len(store.entries) > store.params.capacity:
        evicted = store.entries.pop()
        logger.debug(f"Elite evicted entry with error {evicted.error:.6g}")
    return store


def hard_assignments(weights: np.ndarray) -> np.ndarray:
    """Row-wise argmax of a weight matrix."""
    return np.argmax(np.asarray(weights), axis=1)


def weight_correlation(w_a: np.ndarray, w_b: np.ndarray) -> float:
    """
    Pearson correlation of hard-assignment indicators after label alignment.

    The clusters of w_b are permuted to maximize agreement with w_a, so
    relabelled copies of a partition have correlation 1.

    Args:
        w_a: N x K weights
        w_b: N x K weights

    Returns:
        Correlation in [−1, 1]
    """
    w_a = np.asarray(w_a, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    if w_a.shape != w_b.shape:
        raise ShapeMismatchError(f"Weight shapes differ: {w_a.shape} vs {w_b.shape}")

    _, n_clusters = w_a.shape
    if n_clusters == 1:
        return 1.0

    labels_a = hard_assignments(w_a)
    labels_b = hard_assignments(w_b)
    contingency = np.zeros((n_clusters, n_clusters))
    np.add.at(contingency, (labels_a, labels_b), 1.0)
    perm, _ = best_permutation(contingency)

    # perm[k] is the w_b label matched to w_a label k
    relabel = np.empty(n_clusters, dtype=int)
    relabel[perm] = np.arange(n_clusters)
    indicators_a = np.eye(n_clusters)[labels_a].ravel()
    indicators_b = np.eye(n_clusters)[relabel[labels_b]].ravel()

    return float(np.corrcoef(indicators_a, indicators_b)[0, 1])


def filter_correlated(entries: List[EliteEntry], threshold: float) -> List[EliteEntry]:
    """
    Drop entries correlated above threshold with a lower-error entry.

    Entries must be sorted by ascending error; the survivors keep that order.
    """
    kept: List[EliteEntry] = []
    for entry in entries:
        correlations = (
            weight_correlation(entry.weights, other.weights) for other in kept
        )
        if all(value <= threshold for value in correlations):
            kept.append(entry)
    return kept
