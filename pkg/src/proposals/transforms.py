"""
Coordinate transforms between (X, y) space and the projected PCA space.

A regression vector β defines the hyperplane y = X̃β, i.e. the zero set of
b·[X, y] + β₀ with b = [β̌, −1]. The forward transform centers
Z = [X, y], scales all predictors by one shared factor and y by its own,
rotates onto the retained principal axes and expresses
hyperplanes as α = [α₀₀, α̌]. The inverse transform maps α back to β.

References:
    - docs/algorithms.md: Projected coordinates for split proposals
    - src/proposals/kflat.py, src/proposals/center_split.py: consumers
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from src.utils.clr_exceptions import ProposalFailedError, VerticalHyperplaneError

logger = logging.getLogger(__name__)

VERTICAL_TOLERANCE = 1e-12


@dataclass
class TransformContext:
    """Centering, scaling and rotation used by one forward transform"""

    mu_Z: np.ndarray
    scale: np.ndarray
    V: np.ndarray
    theta_pca: float
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))
    constant_columns: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def D(self) -> int:
        """Retained dimension plus one (length of an α vector)"""
        return int(self.V.shape[1] + 1)


def _plane_vector(beta: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(beta[1:], dtype=float), [-1.0]])


def forward_transform(
    Xs: np.ndarray, ys: np.ndarray, beta0: np.ndarray, theta_pca: float = 1e-8
) -> Tuple[np.ndarray, np.ndarray, TransformContext]:
    """
    Project the points and the hyperplane of beta0 onto the principal axes.

    Args:
        Xs: Sub-population predictors, M x p
        ys: Sub-population responses, length M
        beta0: Regression vector of length p+1
        theta_pca: Relative eigenvalue threshold for retained axes

    Returns:
        Tuple of (P, alpha0, ctx) where P is M x (D−1) and alpha0 has
        length D; α₀₀ = 0 when the plane passes through the centroid

    Raises:
        ProposalFailedError: If fewer than p+2 points are given
    """
    Xs = np.asarray(Xs, dtype=float)
    if Xs.ndim == 1:
        Xs = Xs.reshape(-1, 1)
    ys = np.asarray(ys, dtype=float).ravel()
    beta0 = np.asarray(beta0, dtype=float).ravel()
    n_points, dim = Xs.shape
    if n_points < dim + 2:
        raise ProposalFailedError(
            "transform", f"need at least p+2={dim + 2} points, got {n_points}"
        )

    Z = np.column_stack([Xs, ys])
    mu_Z = Z.mean(axis=0)
    column_std = Z.std(axis=0)
    constant = np.flatnonzero(column_std == 0)
    if constant.size:
        logger.debug(f"Constant columns {constant.tolist()} in projected sample")

    # One common scale for all predictors keeps the space rotation invariant in X
    x_scale = float(np.sqrt(np.mean(np.square(column_std[:dim]))))
    y_scale = float(column_std[dim])
    scale = np.append(
        np.full(dim, x_scale if x_scale > 0 else 1.0), y_scale if y_scale > 0 else 1.0
    )

    Z_hat = (Z - mu_Z) / scale
    eigenvalues, eigenvectors = np.linalg.eigh(Z_hat.T @ Z_hat / n_points)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    top = eigenvalues[0]
    if top > 0:
        keep = eigenvalues / top >= theta_pca
    else:
        keep = np.zeros_like(eigenvalues, dtype=bool)
    keep[0] = True
    V = eigenvectors[:, keep]

    ctx = TransformContext(
        mu_Z=mu_Z,
        scale=scale,
        V=V,
        theta_pca=theta_pca,
        eigenvalues=eigenvalues,
        constant_columns=constant,
    )

    b = _plane_vector(beta0)
    alpha_check = V.T @ (scale * b)
    alpha_00 = beta0[0] + mu_Z @ b
    P = Z_hat @ V
    return P, np.concatenate([[alpha_00], alpha_check]), ctx


def inverse_transform(
    alphas: Sequence[np.ndarray], ctx: TransformContext
) -> List[np.ndarray]:
    """
    Map projected hyperplanes back to regression vectors.

    Args:
        alphas: Vectors [α₀₀, α̌] of length D
        ctx: Context of the forward transform that produced the space

    Returns:
        Regression vectors of length p+1

    Raises:
        VerticalHyperplaneError: If a hyperplane has no response component
    """
    betas = []
    for alpha in alphas:
        alpha = np.asarray(alpha, dtype=float).ravel()
        if alpha.shape[0] != ctx.D:
            raise ValueError(f"alpha must have length D={ctx.D}, got {alpha.shape[0]}")

        b = (ctx.V @ alpha[1:]) / ctx.scale
        b_y = b[-1]
        if abs(b_y) < VERTICAL_TOLERANCE * max(np.linalg.norm(b), 1.0):
            raise VerticalHyperplaneError(float(b_y))

        intercept = (ctx.mu_Z @ b - alpha[0]) / b_y
        slopes = -b[:-1] / b_y
        betas.append(np.concatenate([[intercept], slopes]))
    return betas
