"""
E-step and M-step primitives shared by the EM and EM_is engines.

Weighted least squares, scale estimation, Gaussian reweighting, k-means and
random initialization, and the regression error used for ranking models.

References:
    - docs/algorithms.md: EM flow
    - src/engine/em_engine.py: loop built on these primitives
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.stats import norm
from sklearn.cluster import KMeans

from src.models.clr_models import CLRModel, Dataset, augment
from src.utils.clr_exceptions import DegenerateClusterError, ShapeMismatchError

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
KMEANS_MAX_ITER = 50


def weighted_least_squares(
    Xtil: np.ndarray, y: np.ndarray, w_col: np.ndarray
) -> np.ndarray:
    """
    Solve min_β Σ w_n (y_n − X̃_n β)².

    The system is solved on the sqrt(w)-scaled design with an SVD-based
    least-squares driver, whose effective rank is checked before use.

    Args:
        Xtil: Augmented design, N x (p+1)
        y: Response, length N
        w_col: Non-negative observation weights, length N

    Returns:
        Regression vector of length p+1

    Raises:
        DegenerateClusterError: If the weights vanish or the weighted design
            is rank deficient
    """
    w_col = np.asarray(w_col, dtype=float)
    if np.any(w_col < 0):
        raise ValueError("Weights must be non-negative")

    total = w_col.sum()
    if not total > 0:
        raise DegenerateClusterError("weights sum to zero")

    n_params = Xtil.shape[1]
    if np.count_nonzero(w_col > 0) < n_params:
        raise DegenerateClusterError(
            f"fewer than {n_params} rows carry weight"
        )

    # Rescaling by the total keeps the rank test independent of weight units
    root_w = np.sqrt(w_col / total)
    A = Xtil * root_w[:, None]
    b = y * root_w

    solution, _, rank, singular_values = scipy.linalg.lstsq(
        A, b, cond=RANK_TOLERANCE, lapack_driver="gelsd"
    )
    if rank < n_params:
        raise DegenerateClusterError(
            f"weighted design has rank {rank} < {n_params}"
        )
    return solution


def estimate_sigma(
    residuals: np.ndarray, w_col: np.ndarray, sigma_floor: float = 0.0
) -> float:
    """
    Weighted RMS of residuals, floored at sigma_floor.

    Args:
        residuals: Residuals of one cluster, length N
        w_col: Non-negative weights with positive sum
        sigma_floor: Lower bound applied to the estimate

    Returns:
        sqrt(Σ w ε² / Σ w), at least sigma_floor
    """
    w_col = np.asarray(w_col, dtype=float)
    total = w_col.sum()
    if not total > 0:
        raise ValueError("Weights must have a positive sum")

    sigma = float(np.sqrt(np.dot(w_col, np.square(residuals)) / total))
    return max(sigma, sigma_floor)


def sigma_floor_for(y: np.ndarray, sigma_floor_rel: float) -> float:
    """Absolute sigma floor relative to the response spread."""
    spread = float(np.std(y))
    if not spread > 0:
        spread = 1.0
    return sigma_floor_rel * spread


def reweight(residuals: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """
    Membership weights from Gaussian densities of the residuals.

    w_{n,k} ∝ φ(ε_{n,k}/σ_k)/σ_k, normalized per row. Rows where every
    density underflows get uniform weights.

    Args:
        residuals: N x K residual matrix
        sigma: K positive scales

    Returns:
        Row-stochastic N x K weight matrix
    """
    residuals = np.atleast_2d(np.asarray(residuals, dtype=float))
    sigma = np.asarray(sigma, dtype=float).ravel()
    if residuals.shape[1] != sigma.shape[0]:
        raise ShapeMismatchError(
            f"residuals have {residuals.shape[1]} clusters, sigma {sigma.shape[0]}"
        )
    if np.any(sigma <= 0):
        raise ValueError("Scale parameters must be positive")

    densities = norm.pdf(residuals, loc=0.0, scale=sigma[None, :])
    row_sums = densities.sum(axis=1)
    underflow = np.all(densities < np.finfo(float).tiny, axis=1)

    n_clusters = residuals.shape[1]
    weights = np.full_like(densities, 1.0 / n_clusters)
    ok = ~underflow
    weights[ok] = densities[ok] / row_sums[ok, None]

    if underflow.any():
        logger.debug(f"Uniform weights for {int(underflow.sum())} underflowing rows")
    return weights


def residual_matrix(Xtil: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Residuals y − X̃ β_k for every cluster, N x K."""
    return y[:, None] - Xtil @ np.atleast_2d(beta).T


def one_hot(labels: np.ndarray, n_clusters: int) -> np.ndarray:
    weights = np.zeros((labels.shape[0], n_clusters))
    weights[np.arange(labels.shape[0]), labels] = 1.0
    return weights


def _standardize(Z: np.ndarray) -> np.ndarray:
    scale = Z.std(axis=0)
    scale[scale == 0] = 1.0
    return (Z - Z.mean(axis=0)) / scale


def kmeans_init(ds: Dataset, K: int, seed: int) -> np.ndarray:
    """
    Hard initial weights from k-means on the standardized (X, y) rows.

    Args:
        ds: Dataset to partition
        K: Number of clusters
        seed: Random seed (k-means++ seeding)

    Returns:
        One-hot N x K weights
    """
    if K < 1:
        raise ValueError(f"K must be positive: {K}")
    if ds.N < K:
        raise ValueError(f"Need at least K={K} rows, got {ds.N}")
    if K == 1:
        return np.ones((ds.N, 1))

    Z = _standardize(np.column_stack([ds.X, ds.y]))
    kmeans = KMeans(
        n_clusters=K,
        init="k-means++",
        n_init=1,
        max_iter=KMEANS_MAX_ITER,
        random_state=int(seed % 2**32),
    )
    labels = kmeans.fit_predict(Z)
    centers = kmeans.cluster_centers_.copy()

    # Empty clusters take the point farthest from its own centroid
    counts = np.bincount(labels, minlength=K)
    for k in np.flatnonzero(counts == 0):
        distances = np.linalg.norm(Z - centers[labels], axis=1)
        donors = np.bincount(labels, minlength=K)[labels] > 1
        distances[~donors] = -np.inf
        farthest = int(np.argmax(distances))
        logger.debug(f"Re-seeding empty k-means cluster {k} at row {farthest}")
        labels[farthest] = k
        centers[k] = Z[farthest]

    return one_hot(labels, K)


def random_init(N: int, K: int, seed: int) -> np.ndarray:
    """Random one-hot assignment with every cluster non-empty when N ≥ K."""
    if N < K:
        raise ValueError(f"Need at least K={K} rows, got {N}")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, K, size=N)
    labels[rng.choice(N, size=K, replace=False)] = np.arange(K)
    return one_hot(labels, K)


def weighted_sse(
    Xtil: np.ndarray, y: np.ndarray, beta: np.ndarray, weights: np.ndarray
) -> float:
    return float(np.sum(weights * np.square(residual_matrix(Xtil, y, beta))))


def regression_error(ds: Dataset, model: CLRModel) -> float:
    """
    Σ_n Σ_k w_{n,k} (y_n − X̃_n β_k)².

    Args:
        ds: Dataset the model was fitted on
        model: Model with N x K weights

    Returns:
        Weighted squared regression error
    """
    if model.weights is None:
        raise ShapeMismatchError("Model has no membership weights")
    if model.weights.shape[0] != ds.N:
        raise ShapeMismatchError(
            f"Model weights cover {model.weights.shape[0]} rows, dataset has {ds.N}"
        )
    if model.p != ds.p:
        raise ShapeMismatchError(f"Model has p={model.p}, dataset has p={ds.p}")
    return weighted_sse(augment(ds.X), ds.y, model.beta, model.weights)


def fit_betas(
    Xtil: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    fallback: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Per-cluster weighted least squares.

    Clusters whose design is degenerate keep their row of fallback; without
    a fallback the error propagates.
    """
    n_clusters = weights.shape[1]
    betas = np.empty((n_clusters, Xtil.shape[1]))
    for k in range(n_clusters):
        try:
            betas[k] = weighted_least_squares(Xtil, y, weights[:, k])
        except DegenerateClusterError as e:
            if fallback is None:
                raise DegenerateClusterError(e.details, cluster=k) from e
            betas[k] = fallback[k]
    return betas
