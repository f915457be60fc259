"""
Center-point splitting of a supercluster hyperplane.

A supercluster fit tends to bisect the true hyperplanes it absorbed. Near
the fitted plane the two true planes intersect, and moving away from it
they separate along one direction v inside the plane. The spread of the
in-plane projections along v therefore grows with the width of the slab
around the plane, which identifies v. The innermost slab also locates
where the planes cross along v. The split is α₀ ± γv, pivoted on that
crossing, with γ chosen to minimize the squared distance of every point
to its nearer plane.

References:
    - docs/algorithms.md: Center-point splitting
    - src/proposals/transforms.py: projected coordinates
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.models.problem_models import SplitParams
from src.proposals.transforms import forward_transform, inverse_transform
from src.utils.clr_exceptions import ProposalFailedError

logger = logging.getLogger(__name__)

GAMMA_RANGE_FACTOR = 10.0


def _slab(L: np.ndarray, bounds: Tuple[float, float]) -> np.ndarray:
    low, high = np.percentile(L, bounds)
    return (L >= low) & (L <= high)


def _split_alphas(
    alpha0: np.ndarray, v: np.ndarray, gamma: float, shift: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    # Both children cross the parent plane where v·P = shift
    alphas = []
    for sign in (1.0, -1.0):
        direction = alpha0[1:] + sign * gamma * v
        offset = alpha0[0] - sign * gamma * shift
        alpha = np.concatenate([[offset], direction])
        alphas.append(alpha / np.linalg.norm(direction))
    return alphas[0], alphas[1]


def split_objective(
    P: np.ndarray,
    alpha0: np.ndarray,
    v: np.ndarray,
    gamma: float,
    shift: float = 0.0,
) -> float:
    """Sum of squared distances of P to the nearer of the two split planes."""
    alpha1, alpha2 = _split_alphas(alpha0, v, gamma, shift)
    d1 = alpha1[0] + P @ alpha1[1:]
    d2 = alpha2[0] + P @ alpha2[1:]
    return float(np.sum(np.minimum(d1**2, d2**2)))


def _search_gamma(
    P: np.ndarray,
    alpha0: np.ndarray,
    v: np.ndarray,
    shift: float,
    params: SplitParams,
) -> float:
    gamma_max = GAMMA_RANGE_FACTOR * np.linalg.norm(alpha0[1:])
    grid = np.linspace(0.0, gamma_max, params.gamma_scan_points + 1)
    values = np.array([split_objective(P, alpha0, v, g, shift) for g in grid[1:]])
    best = int(np.argmin(values)) + 1

    lower = grid[best - 1]
    upper = grid[min(best + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda g: split_objective(P, alpha0, v, g, shift),
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": params.gamma_rel_tol * grid[best]},
    )
    gamma = float(result.x)
    if split_objective(P, alpha0, v, gamma, shift) > values[best - 1]:
        gamma = float(grid[best])
    return gamma


def center_point_split(
    Xs: np.ndarray,
    ys: np.ndarray,
    beta0: np.ndarray,
    params: Optional[SplitParams] = None,
) -> List[np.ndarray]:
    """
    Split the points attracted by beta0 into two regression vectors.

    Args:
        Xs: Sub-population predictors, M x p
        ys: Sub-population responses, length M
        beta0: Supercluster regression vector
        params: Split parameters (defaults when omitted)

    Returns:
        Two regression vectors [β₁, β₂]

    Raises:
        ProposalFailedError: If a slab holds too few points or the parent
            plane has no extent in projected coordinates
    """
    params = params or SplitParams()

    P, alpha0, ctx = forward_transform(Xs, ys, beta0, params.theta_pca)
    dim = P.shape[1]
    norm0 = float(np.linalg.norm(alpha0[1:]))
    if norm0 == 0 or dim < 2:
        raise ProposalFailedError(
            "center_point", "parent hyperplane is degenerate in projected space"
        )
    u0 = alpha0[1:] / norm0

    L = (alpha0[0] + P @ alpha0[1:]) / norm0
    Q = P - np.outer(L, u0)

    slabs = [_slab(L, bounds) for bounds in params.theta_pairs]
    for bounds, mask in zip(params.theta_pairs, slabs):
        if mask.sum() < dim + 1:
            raise ProposalFailedError(
                "center_point",
                f"slab {bounds} holds {int(mask.sum())} points, need {dim + 1}",
            )

    # Probing basis from the innermost slab, reused for the wider ones
    center = Q[slabs[0]]
    centered = center - center.mean(axis=0)
    _, eigenvectors = np.linalg.eigh(centered.T @ centered)
    aligned = int(np.argmax(np.abs(eigenvectors.T @ u0)))
    basis = np.delete(eigenvectors, aligned, axis=1)

    spreads = np.array([np.var(Q[mask] @ basis, axis=0) for mask in slabs])
    peak = spreads.max(axis=0)
    safe_peak = np.where(peak > 0, peak, 1.0)
    variation = np.where(peak > 0, (peak - spreads.min(axis=0)) / safe_peak, 0.0)
    v = basis[:, int(np.argmax(variation))]
    # The center slab gathers around the line where the two planes cross
    shift = float(np.median(center @ v))

    gamma = _search_gamma(P, alpha0, v, shift, params)
    alpha1, alpha2 = _split_alphas(alpha0, v, gamma, shift)

    logger.debug(
        f"Center-point split: gamma={gamma:.6g} (|alpha|={norm0:.6g}), "
        f"shift={shift:.3g}, variation={variation.max():.3f}"
    )
    return inverse_transform([alpha1, alpha2], ctx)
