"""
Edge-point K-flat splitting of a supercluster into two hyperplanes.

Points far from the supercluster's own hyperplane ("edge points") usually
lie on only one of the true hyperplanes, so a local flat fitted to an edge
point's nearest neighbors is a good seed for that hyperplane. The second
flat is seeded at the point the first one explains worst.

References:
    - docs/algorithms.md: Edge-point K-flat
    - src/proposals/transforms.py: projected coordinates
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from sklearn.neighbors import NearestNeighbors

from src.models.problem_models import SplitParams
from src.proposals.transforms import forward_transform, inverse_transform
from src.utils.clr_exceptions import DegenerateClusterError, ProposalFailedError

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12
SPREAD_FLOOR_REL = 1e-12


def kflat_fit(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Fit a hyperplane to points by the least principal direction.

    Args:
        points: m x d point cloud

    Returns:
        Tuple of (alpha, s): alpha = [α₀, n] with unit normal n and the plane
        through the centroid, s the std of the signed distances

    Raises:
        DegenerateClusterError: If m < d+1 or the cloud spans fewer than
            d−1 directions
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m, d = points.shape
    if m < d + 1:
        raise DegenerateClusterError(f"k-flat needs {d + 1} points, got {m}")

    centroid = points.mean(axis=0)
    centered = points - centroid
    eigenvalues, eigenvectors = np.linalg.eigh(centered.T @ centered / m)

    rank = int(np.sum(eigenvalues > RANK_TOLERANCE * max(eigenvalues[-1], 1e-300)))
    if eigenvalues[-1] <= 0 or rank < d - 1:
        raise DegenerateClusterError(f"k-flat point cloud has rank {rank} < {d - 1}")

    normal = eigenvectors[:, 0]
    alpha = np.concatenate([[-normal @ centroid], normal])
    distances = centered @ normal
    return alpha, float(np.std(distances))


def signed_distances(P: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """α₀ + P α̌ for every row of P."""
    return alpha[0] + P @ alpha[1:]


def _pair_error(P: np.ndarray, alpha1: np.ndarray, alpha2: np.ndarray) -> float:
    return float(
        np.sum(
            np.minimum(
                np.abs(signed_distances(P, alpha1)), np.abs(signed_distances(P, alpha2))
            )
        )
    )


def _refine(
    P: np.ndarray, alphas: List[np.ndarray], error: float, steps: int
) -> Tuple[List[np.ndarray], float]:
    """A few two-flat alternations: assign to the nearer flat, refit both."""
    for step in range(steps):
        nearer = np.abs(signed_distances(P, alphas[0])) <= np.abs(
            signed_distances(P, alphas[1])
        )
        try:
            candidate = [kflat_fit(P[nearer])[0], kflat_fit(P[~nearer])[0]]
        except DegenerateClusterError:
            break
        candidate_error = _pair_error(P, *candidate)
        if candidate_error >= error:
            break
        alphas, error = candidate, candidate_error
        logger.debug(f"K-flat refinement step {step}: E={error:.6g}")
    return alphas, error


def edge_point_kflat(
    Xs: np.ndarray,
    ys: np.ndarray,
    beta0: np.ndarray,
    params: Optional[SplitParams] = None,
    rng: Optional[np.random.Generator] = None,
) -> List[np.ndarray]:
    """
    Split the points attracted by beta0 into two regression vectors.

    Args:
        Xs: Sub-population predictors, M x p
        ys: Sub-population responses, length M
        beta0: Supercluster regression vector
        params: Split parameters (defaults when omitted)
        rng: Random generator for the shortlist percentile and seed points

    Returns:
        Two regression vectors [β₁, β₂]

    Raises:
        ProposalFailedError: If no candidate pair could be fitted
    """
    params = params or SplitParams()
    rng = rng if rng is not None else np.random.default_rng()

    P, alpha0, ctx = forward_transform(Xs, ys, beta0, params.theta_pca)
    n_points, dim = P.shape
    k_nn = params.k_nn or dim + 3
    if n_points < 2 * k_nn:
        raise ProposalFailedError(
            "edge_point",
            f"need {2 * k_nn} points for two neighborhoods, got {n_points}",
        )

    rms_radius = float(np.sqrt(np.mean(np.sum(P**2, axis=1))))
    spread_floor = SPREAD_FLOOR_REL * max(rms_radius, 1.0)

    distance_to_parent = np.abs(signed_distances(P, alpha0))
    f = rng.uniform(*params.f_range)
    threshold = np.percentile(distance_to_parent, 100.0 - f)
    available = distance_to_parent >= threshold

    neighbors = NearestNeighbors(n_neighbors=k_nn).fit(P)

    best_pair: Optional[List[np.ndarray]] = None
    best_error = np.inf
    candidates_tried = 0

    while available.any():
        s1 = int(rng.choice(np.flatnonzero(available)))
        available[s1] = False
        candidates_tried += 1

        hood1 = neighbors.kneighbors(P[s1 : s1 + 1], return_distance=False)[0]
        try:
            alpha1, spread1 = kflat_fit(P[hood1])
        except DegenerateClusterError:
            continue

        s2 = int(np.argmax(np.abs(signed_distances(P, alpha1))))
        hood2 = neighbors.kneighbors(P[s2 : s2 + 1], return_distance=False)[0]
        try:
            alpha2, spread2 = kflat_fit(P[hood2])
        except DegenerateClusterError:
            available[hood1] = False
            continue

        error = _pair_error(P, alpha1, alpha2)
        if error < best_error:
            best_pair, best_error = [alpha1, alpha2], error

        # Shortlisted points already explained by either flat are not retried
        scaled = np.minimum(
            np.abs(signed_distances(P, alpha1)) / max(spread1, spread_floor),
            np.abs(signed_distances(P, alpha2)) / max(spread2, spread_floor),
        )
        available &= scaled >= params.xi
        available[hood1] = False
        available[hood2] = False

    if best_pair is None:
        raise ProposalFailedError(
            "edge_point",
            f"no valid flat pair among {candidates_tried} shortlist points",
        )

    if params.optimize_steps:
        best_pair, best_error = _refine(P, best_pair, best_error, params.optimize_steps)

    logger.debug(
        f"Edge-point K-flat: f={f:.1f}, k_nn={k_nn}, tried {candidates_tried}, "
        f"E={best_error:.6g}"
    )
    return inverse_transform(best_pair, ctx)
