"""
Resolvability of a CLR model from its parameters and the observed X.

R = 1 − Q, where Q is the normalized overlap volume of the Gaussian
hyperplane densities of the clusters, averaged over the observed rows:

    Q ≈ sqrt(K / Σσ_k⁻²) · (1/N) Σ_l exp{−½ Σ_k a_k²/σ_k²
            + ½ (Σ_k a_k/σ_k²)² / Σσ_k⁻²} / Π σ_k^{1/K},   a_k = X̃_l β_k

Closed-form overlaps for the special geometries (parallel planes, equal
noise, identical planes with unequal noise) serve as reference values.

References:
    - docs/algorithms.md: Resolvability and its special cases
    - src/batch/batch_processor.py: R columns of the result records
"""

import itertools
import logging
from typing import Any, List, Literal, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import logsumexp
from scipy.stats import norm

from src.models.clr_models import ResolvabilityReport, augment
from src.utils.clr_exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


def _validate(X: np.ndarray, beta: np.ndarray, sigma: np.ndarray):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    sigma = np.asarray(sigma, dtype=float).ravel()
    if beta.shape[0] != sigma.shape[0]:
        raise ShapeMismatchError(
            f"beta has {beta.shape[0]} clusters but sigma has {sigma.shape[0]}"
        )
    if beta.shape[1] != X.shape[1] + 1:
        raise ShapeMismatchError(
            f"beta has {beta.shape[1]} columns, expected p+1={X.shape[1] + 1}"
        )
    if beta.shape[0] < 2:
        raise ValueError("Resolvability needs at least two clusters")
    if np.any(sigma <= 0):
        raise ValueError("Scale parameters must be positive")
    return X, beta, sigma


def overlap(X: np.ndarray, beta: np.ndarray, sigma: np.ndarray) -> float:
    """Empirical overlap Q of the cluster densities over the rows of X."""
    X, beta, sigma = _validate(X, beta, sigma)
    n_clusters = beta.shape[0]

    a = augment(X) @ beta.T
    precision = sigma**-2
    total_precision = precision.sum()

    exponent = -0.5 * np.sum(a**2 * precision, axis=1) + 0.5 * (
        (a @ precision) ** 2 / total_precision
    )
    # Cauchy-Schwarz keeps the exponent non-positive; clip rounding noise
    exponent = np.minimum(exponent, 0.0)

    log_mean = logsumexp(exponent) - np.log(exponent.shape[0])
    log_prefactor = 0.5 * np.log(n_clusters / total_precision) - np.mean(np.log(sigma))
    return float(np.exp(log_prefactor + log_mean))


def resolvability(X: np.ndarray, beta: np.ndarray, sigma: np.ndarray) -> float:
    """
    Resolvability R of a model on the observed predictors, clamped to [0, 1].

    Args:
        X: Observed predictors, N x p
        beta: Regression vectors, K x (p+1)
        sigma: K positive noise scales

    Returns:
        R in [0, 1]; 0 for indistinguishable clusters, 1 for separable ones
    """
    return float(np.clip(1.0 - overlap(X, beta, sigma), 0.0, 1.0))


def pairwise_resolvability(
    X: np.ndarray, beta: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    """Resolvability of every cluster pair, sorted descending."""
    values, _ = _pairwise(X, beta, sigma)
    return values


def _pairwise(
    X: np.ndarray, beta: np.ndarray, sigma: np.ndarray
) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    X, beta, sigma = _validate(X, beta, sigma)
    pairs = list(itertools.combinations(range(beta.shape[0]), 2))
    values = np.array(
        [resolvability(X, beta[list(pair)], sigma[list(pair)]) for pair in pairs]
    )
    order = np.argsort(-values, kind="stable")
    return values[order], [pairs[i] for i in order]


def normalization_constant(sigma: np.ndarray) -> float:
    """Z with Z⁻¹ = (2π)^{(K−2)/2} √K Π σ_k^{(K−1)/K}."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    n_clusters = sigma.shape[0]
    log_inverse = (
        0.5 * (n_clusters - 2) * np.log(2.0 * np.pi)
        + 0.5 * np.log(n_clusters)
        + (n_clusters - 1) / n_clusters * np.sum(np.log(sigma))
    )
    return float(np.exp(-log_inverse))


def resolvability_report(
    X: np.ndarray, beta: np.ndarray, sigma: np.ndarray
) -> ResolvabilityReport:
    """Global R, sorted pairwise R with their cluster pairs, and Z."""
    values, pairs = _pairwise(X, beta, sigma)
    return ResolvabilityReport(
        R_global=resolvability(X, beta, sigma),
        R_pairwise=values,
        Z_norm=normalization_constant(sigma),
        per_pair_labels=pairs,
    )


def closed_form_overlap(case: Literal["II", "III", "IV"], **params: Any) -> float:
    """
    Closed-form or quadrature reference value of the overlap Q.

    Cases:
        II: parallel planes. params: offsets (K), sigma (K). Q does not
            depend on X because the planes share their slopes.
        III: equal noise σ. params: beta (K x (p+1)), sigma (scalar), and
            either X (samples to average over) or, for p = 1, nothing, in
            which case X ~ N(0, 1) is integrated by quadrature.
        IV: identical planes, two clusters. params: ratio = σ_2/σ_1.

    Returns:
        Q; the matching resolvability is 1 − Q
    """
    if case == "IV":
        ratio = float(params["ratio"])
        if ratio <= 0:
            raise ValueError(f"Noise ratio must be positive: {ratio}")
        return float(np.sqrt(2.0 * ratio / (1.0 + ratio**2)))

    if case == "II":
        offsets = np.asarray(params["offsets"], dtype=float).ravel()
        sigma = np.asarray(params["sigma"], dtype=float).ravel()
        if offsets.shape != sigma.shape or offsets.size < 2:
            raise ValueError("Case II needs matching offsets and sigma, K >= 2")
        if np.any(sigma <= 0):
            raise ValueError("Scale parameters must be positive")
        precision = sigma**-2
        exponent = -0.5 * np.sum(offsets**2 * precision) + 0.5 * (
            np.dot(offsets, precision) ** 2 / precision.sum()
        )
        prefactor = np.sqrt(sigma.size / precision.sum()) / np.exp(
            np.mean(np.log(sigma))
        )
        return float(prefactor * np.exp(min(exponent, 0.0)))

    if case == "III":
        beta = np.atleast_2d(np.asarray(params["beta"], dtype=float))
        sigma = float(params["sigma"])
        if sigma <= 0:
            raise ValueError("Scale parameter must be positive")
        n_clusters = beta.shape[0]
        X: Optional[np.ndarray] = params.get("X")

        def alpha(a: np.ndarray) -> np.ndarray:
            return np.sum(a**2, axis=-1) - np.sum(a, axis=-1) ** 2 / n_clusters

        if X is not None:
            a = augment(np.asarray(X, dtype=float).reshape(len(X), -1)) @ beta.T
            return float(np.mean(np.exp(-alpha(a) / (2.0 * sigma**2))))

        if beta.shape[1] != 2:
            raise ValueError("Quadrature is only available for one-dimensional X")

        def integrand(x: float) -> float:
            a = beta[:, 0] + beta[:, 1] * x
            return float(np.exp(-alpha(a) / (2.0 * sigma**2)) * norm.pdf(x))

        value, _ = integrate.quad(integrand, -np.inf, np.inf)
        return float(value)

    raise ValueError(f"Unsupported oracle case: {case}")
