"""
Cluster label matching.

Cluster indices of two solutions are arbitrary, so scores comparing them
are maximized over permutations. Small K is searched exhaustively; larger
K uses the Hungarian algorithm on the same score matrix.
"""

import itertools
from typing import Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

EXHAUSTIVE_MAX_K = 6


def best_permutation(score: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Permutation π maximizing Σ_k score[k, π(k)].

    Args:
        score: Square K x K matrix, rows indexed by reference clusters

    Returns:
        Tuple of (π as an index array, total score)
    """
    score = np.asarray(score, dtype=float)
    n_clusters = score.shape[0]
    if score.shape != (n_clusters, n_clusters):
        raise ValueError(f"Score matrix must be square, got {score.shape}")

    rows = np.arange(n_clusters)
    if n_clusters <= EXHAUSTIVE_MAX_K:
        best_perm, best_total = None, -np.inf
        for perm in itertools.permutations(range(n_clusters)):
            total = score[rows, perm].sum()
            if total > best_total:
                best_perm, best_total = perm, total
        return np.asarray(best_perm), float(best_total)

    row_ind, col_ind = linear_sum_assignment(score, maximize=True)
    perm = np.empty(n_clusters, dtype=int)
    perm[row_ind] = col_ind
    return perm, float(score[rows, perm].sum())
