"""
Benchmark accuracy metrics: ACC, RMSE and X-Predictability.

References:
    - docs/algorithms.md: Metrics section
    - src/predict/predictor.py: membership probabilities for RMSE modes
"""

import logging
from typing import Literal, Optional

import numpy as np
from scipy.stats import entropy

from src.metrics.matching import best_permutation
from src.models.clr_models import ClusterDensityModel, CLRModel, Dataset
from src.utils.clr_exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


def acc(
    beta_hat: np.ndarray,
    beta_true: np.ndarray,
    norm_mode: Literal["cluster", "global"] = "cluster",
) -> float:
    """
    Permutation-matched relative accuracy of recovered regression vectors.

    ACC = (1/K) Σ_k max(0, 1 − ‖β̂_π(k) − β_k‖ / ‖β_k‖), maximized over π.

    Args:
        beta_hat: Estimated vectors, K x (p+1)
        beta_true: True vectors, K x (p+1)
        norm_mode: Denominator per cluster ("cluster") or the norm of the
            stacked true vectors ("global")

    Returns:
        ACC in [0, 1]
    """
    beta_hat = np.atleast_2d(np.asarray(beta_hat, dtype=float))
    beta_true = np.atleast_2d(np.asarray(beta_true, dtype=float))
    if beta_hat.shape != beta_true.shape:
        raise ShapeMismatchError(
            f"beta_hat {beta_hat.shape} does not match beta_true {beta_true.shape}"
        )

    if norm_mode == "cluster":
        denominators = np.linalg.norm(beta_true, axis=1)
    elif norm_mode == "global":
        denominators = np.full(beta_true.shape[0], np.linalg.norm(beta_true))
    else:
        raise ValueError(f"Unsupported norm mode: {norm_mode}")
    denominators = np.where(denominators > 0, denominators, 1.0)

    # score[k, j]: accuracy of estimate j as a match for true cluster k
    distances = np.linalg.norm(beta_true[:, None, :] - beta_hat[None, :, :], axis=2)
    score = np.maximum(0.0, 1.0 - distances / denominators[:, None])

    _, total = best_permutation(score)
    return total / beta_true.shape[0]


def xp_score(p_vec: np.ndarray) -> float:
    """
    X-Predictability, one minus the normalized entropy of p_vec.

    XP = 1 + Σ p_k log p_k / log K, with 0·log 0 = 0.
    """
    p_vec = np.asarray(p_vec, dtype=float).ravel()
    if np.any(p_vec < 0):
        raise ValueError("Probabilities must be non-negative")
    if p_vec.size <= 1:
        return 1.0
    total = p_vec.sum()
    if not np.isclose(total, 1.0, atol=1e-6):
        raise ValueError(f"Probabilities must sum to 1, got {total}")

    value = 1.0 - entropy(p_vec) / np.log(p_vec.size)
    return float(np.clip(value, 0.0, 1.0))


def rmse(
    ds: Dataset,
    model: CLRModel,
    mode: Literal["coerced", "weighted"] = "weighted",
    density: Optional[ClusterDensityModel] = None,
) -> float:
    """
    Root mean square error of a scalar reduction of the K predictions.

    With a density model the probabilities come from X alone, as for new
    data. Without one the model's own membership weights are used, which
    requires the model to have been fitted on ds.

    Args:
        ds: Dataset to score
        model: Fitted model
        mode: "coerced" uses the most probable cluster, "weighted" the
            probability-weighted average
        density: Optional X-density model for out-of-sample probabilities

    Returns:
        RMSE over all rows
    """
    if model.p != ds.p:
        raise ShapeMismatchError(f"Model has p={model.p}, dataset has p={ds.p}")

    yhat = model.predictions(ds.X)

    if density is not None:
        # predictor imports this module
        from src.predict.predictor import membership_probabilities

        probs = membership_probabilities(ds.X, density)
    else:
        if model.weights is None or model.weights.shape[0] != ds.N:
            raise ShapeMismatchError(
                "Model weights do not cover the dataset; pass a density model"
            )
        probs = model.weights

    if mode == "coerced":
        reduced = yhat[np.arange(ds.N), np.argmax(probs, axis=1)]
    elif mode == "weighted":
        reduced = np.sum(probs * yhat, axis=1)
    else:
        raise ValueError(f"Unsupported prediction mode: {mode}")

    return float(np.sqrt(np.mean(np.square(ds.y - reduced))))
