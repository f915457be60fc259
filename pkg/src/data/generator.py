"""
Randomized CLR problem generator with controlled class characteristics.

Problems are characterized by the number of clusters K, the input
dimension p, per-cluster sample sizes, the common pairwise dot product dp of
the unit regression directions, the noise scale eta, the centroid offset
delta and an optional fraction of corrupted responses.

References:
    - docs/algorithms.md: Problem generator conventions
    - src/models/problem_models.py: ProblemSpec validation
"""

import logging
from typing import Tuple

import numpy as np

from src.models.clr_models import Dataset, GroundTruth, augment
from src.models.problem_models import ProblemSpec
from src.utils.clr_exceptions import DimensionError

logger = logging.getLogger(__name__)

OFFSET_RANGE = (-1.0, 1.0)
# Recorded sigma of noise-free clusters, relative to the signal spread
TRUE_SIGMA_FLOOR_REL = 1e-6


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def unit_directions(
    K: int, p: int, dp: float, rng: np.random.Generator
) -> np.ndarray:
    """
    K unit vectors in R^p with pairwise dot products exactly dp.

    Uses β̌_k = √dp·u₀ + √(1−dp)·e_k with u₀, e_1..e_K orthonormal when
    p > K. When p == K there is no room for u₀ and the vectors are built
    from a Cholesky factor of the same Gram matrix instead.

    Raises:
        DimensionError: If K > p
    """
    if K > p:
        raise DimensionError(K, p)

    if dp == 0.0 or p > K:
        n_basis = K if dp == 0.0 else K + 1
        basis, _ = np.linalg.qr(rng.standard_normal((p, n_basis)))
        e = basis[:, :K].T
        if dp == 0.0:
            return e
        u0 = basis[:, K]
        return np.sqrt(dp) * u0[None, :] + np.sqrt(1.0 - dp) * e

    gram = dp * np.ones((K, K)) + (1.0 - dp) * np.eye(K)
    factor = np.linalg.cholesky(gram)
    basis, _ = np.linalg.qr(rng.standard_normal((p, K)))
    return factor @ basis.T


def generate_problem(spec: ProblemSpec) -> Tuple[Dataset, GroundTruth]:
    """
    Generate one dataset and its ground truth from a ProblemSpec.

    Args:
        spec: Validated generator parameters

    Returns:
        Tuple of (Dataset, GroundTruth); corrupted rows carry label -1

    Raises:
        DimensionError: If the directions cannot be constructed (K > p)
    """
    rng = np.random.default_rng(spec.seed)
    K, p = spec.K, spec.p

    directions = unit_directions(K, p, spec.dp, rng)
    offsets = rng.uniform(*OFFSET_RANGE, size=K)
    beta = np.column_stack([offsets, directions])

    X_blocks = []
    labels = []
    for k, size in enumerate(spec.cluster_sizes):
        centroid = np.zeros(p)
        if spec.delta > 0:
            centroid = spec.delta * _random_unit(rng, p)
        X_blocks.append(rng.standard_normal((size, p)) + centroid)
        labels.append(np.full(size, k))
    X = np.vstack(X_blocks)
    labels_arr = np.concatenate(labels)

    signal = augment(X) @ beta.T
    spreads = np.array([np.std(signal[labels_arr == k, k]) for k in range(K)])
    spreads = np.where(spreads > 0, spreads, 1.0)
    sigma = max(spec.eta, TRUE_SIGMA_FLOOR_REL) * spreads

    y = signal[np.arange(X.shape[0]), labels_arr]
    if spec.eta > 0:
        y = y + rng.standard_normal(X.shape[0]) * sigma[labels_arr]

    order = rng.permutation(X.shape[0])
    dataset = Dataset(X=X[order], y=y[order], labels=labels_arr[order])
    truth = GroundTruth(beta=beta, sigma=sigma, labels=labels_arr[order], spec=spec)

    logger.debug(
        f"Generated problem K={K} p={p} N={spec.N} dp={spec.dp} eta={spec.eta} "
        f"seed={spec.seed}"
    )

    if spec.corrupt_frac > 0:
        dataset, truth = corrupt_rows(
            dataset, truth, spec.corrupt_frac, int(rng.integers(0, 2**63 - 1))
        )
    return dataset, truth


def corrupt_rows(
    ds: Dataset, gt: GroundTruth, frac: float, seed: int
) -> Tuple[Dataset, GroundTruth]:
    """
    Replace the response of ⌊frac·N⌋ uniformly chosen rows.

    The new responses are drawn from a normal fit (mean, std) of the
    uncorrupted responses, and the rows get label -1.

    Args:
        ds: Dataset to corrupt (not modified)
        gt: Matching ground truth (not modified)
        frac: Fraction of rows to corrupt, 0 <= frac < 1
        seed: Random seed

    Returns:
        New (Dataset, GroundTruth) pair
    """
    if not 0.0 <= frac < 1.0:
        raise ValueError(f"Corruption fraction must be in [0, 1): {frac}")

    n_corrupt = int(np.floor(frac * ds.N))
    if n_corrupt == 0:
        return ds, gt

    rng = np.random.default_rng(seed)
    clean = gt.labels >= 0
    mean_y = float(np.mean(ds.y[clean]))
    std_y = float(np.std(ds.y[clean]))

    candidates = np.flatnonzero(clean)
    rows = rng.choice(candidates, size=min(n_corrupt, candidates.size), replace=False)

    y = ds.y.copy()
    y[rows] = rng.normal(mean_y, std_y, size=rows.size)
    labels = gt.labels.copy()
    labels[rows] = -1

    logger.debug(f"Corrupted {rows.size} of {ds.N} rows")
    return (
        Dataset(X=ds.X.copy(), y=y, labels=labels),
        GroundTruth(beta=gt.beta, sigma=gt.sigma, labels=labels, spec=gt.spec),
    )


DEMO_MEANS = (-2.0, 0.25, 1.5)
DEMO_STDS = (1.0, 0.64, 1.0)
DEMO_BETA = np.array([[0.0, -0.5], [1.0, 0.2], [0.0, 0.5]])


def three_cluster_prediction_instance(
    n_total: int = 3000, seed: int = 0
) -> Tuple[Dataset, GroundTruth]:
    """
    Noise-free one-dimensional three-cluster instance for prediction demos.

    X_1 ~ N(−2, 1), X_2 ~ N(1/4, 0.64²), X_3 ~ N(3/2, 1) with
    y_1 = −X/2, y_2 = 1 + X/5, y_3 = X/2 and equal cluster sizes.
    """
    rng = np.random.default_rng(seed)
    sizes = [n_total // 3] * 3
    for k in range(n_total - sum(sizes)):
        sizes[k] += 1

    X = np.concatenate(
        [
            rng.normal(mean, std, size=size)
            for mean, std, size in zip(DEMO_MEANS, DEMO_STDS, sizes)
        ]
    ).reshape(-1, 1)
    labels = np.repeat(np.arange(3), sizes)
    y = np.sum(augment(X) * DEMO_BETA[labels], axis=1)
    spreads = np.array([np.std(y[labels == k]) for k in range(3)])
    spreads = np.where(spreads > 0, spreads, 1.0)
    sigma = TRUE_SIGMA_FLOOR_REL * spreads

    return (
        Dataset(X=X, y=y, labels=labels),
        GroundTruth(beta=DEMO_BETA.copy(), sigma=sigma, labels=labels),
    )
