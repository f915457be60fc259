"""
Prediction with fitted CLR models.

A CLR model gives K predictions at every x. The membership weights of the
training rows define a weighted Gaussian density of X per cluster, from
which the probability of each prediction and the X-Predictability of the
point follow. Scalar reductions (coerced and weighted) are reported next to
the full per-cluster output, never instead of it.

References:
    - docs/algorithms.md: Prediction and X-Predictability
    - src/metrics/accuracy.py: xp_score
"""

import logging
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from src.metrics.accuracy import xp_score
from src.models.clr_models import ClusterDensityModel, CLRModel, Dataset, Prediction
from src.utils.clr_exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)

RIDGE_REL = 1e-6
MIN_WEIGHT_REL = 1e-6
LOG_TINY = np.log(np.finfo(float).tiny)


def fit_density(
    ds: Dataset, model: CLRModel, weights: Optional[np.ndarray] = None
) -> ClusterDensityModel:
    """
    Weighted Gaussian fit of X for every cluster.

    Args:
        ds: Training dataset
        model: Fitted model; its membership weights are used unless weights
            is given
        weights: Optional N x K weights overriding the model's

    Returns:
        ClusterDensityModel; clusters with negligible weight are inactive
    """
    weights = model.weights if weights is None else np.asarray(weights, dtype=float)
    if weights is None:
        raise ShapeMismatchError("Density fitting needs membership weights")
    if weights.shape != (ds.N, model.K):
        raise ShapeMismatchError(
            f"Weights must be {ds.N} x {model.K}, got {weights.shape}"
        )

    n_clusters, dim = model.K, ds.p
    totals = weights.sum(axis=0)
    active = totals >= MIN_WEIGHT_REL * ds.N

    means = np.zeros((n_clusters, dim))
    covariances = np.tile(np.eye(dim), (n_clusters, 1, 1))
    for k in np.flatnonzero(active):
        w = weights[:, k] / totals[k]
        means[k] = w @ ds.X
        centered = ds.X - means[k]
        cov = (centered * w[:, None]).T @ centered
        ridge = RIDGE_REL * max(np.trace(cov) / dim, np.finfo(float).tiny)
        covariances[k] = cov + ridge * np.eye(dim)

    if not active.all():
        logger.warning(
            f"Dropped densities of clusters {np.flatnonzero(~active).tolist()} "
            "with negligible weight"
        )

    mix = np.where(active, totals, 0.0)
    mix = mix / mix.sum()
    return ClusterDensityModel(
        means=means, covariances=covariances, mix=mix, active=active
    )


def _log_terms(X: np.ndarray, density: ClusterDensityModel) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != density.means.shape[1]:
        raise ShapeMismatchError(
            f"X has {X.shape[1]} columns, density expects {density.means.shape[1]}"
        )
    terms = np.full((X.shape[0], density.K), -np.inf)
    for k in np.flatnonzero(density.active):
        terms[:, k] = np.log(density.mix[k]) + multivariate_normal.logpdf(
            X, mean=density.means[k], cov=density.covariances[k], allow_singular=True
        ).reshape(-1)
    return terms


def _normalize(terms: np.ndarray):
    underflow = np.all(terms < LOG_TINY, axis=1)
    probs = np.full_like(terms, 1.0 / terms.shape[1])
    ok = ~underflow
    if ok.any():
        probs[ok] = np.exp(terms[ok] - logsumexp(terms[ok], axis=1, keepdims=True))
    return probs, underflow


def membership_probabilities(
    X: np.ndarray, density: ClusterDensityModel
) -> np.ndarray:
    """
    Probability of each cluster at every row of X.

    Rows where every density underflows get uniform probabilities.
    """
    probs, _ = _normalize(_log_terms(X, density))
    return probs


def predict(
    x: np.ndarray, model: CLRModel, density: ClusterDensityModel
) -> Prediction:
    """
    Per-cluster predictions, probabilities and XP at one point.

    Args:
        x: Predictor vector of length p
        model: Fitted model
        density: Density model fitted from the same model

    Returns:
        Prediction; xp = 0 and underflow set when no density covers x
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != model.p:
        raise ShapeMismatchError(f"x has {x.shape[1]} entries, model expects {model.p}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    if density.K != model.K:
        raise ShapeMismatchError(f"Density has K={density.K}, model has K={model.K}")

    yhat = model.predictions(x)[0]
    probs_matrix, underflow_rows = _normalize(_log_terms(x, density))
    probs = probs_matrix[0]
    underflow = bool(underflow_rows[0])

    return Prediction(
        per_cluster_yhat=yhat,
        probs=probs,
        xp=0.0 if underflow else xp_score(probs),
        coerced=float(yhat[np.argmax(probs)]),
        weighted=float(probs @ yhat),
        underflow=underflow,
    )


def _prediction_frame(X: np.ndarray, predictions: List[Prediction]) -> pd.DataFrame:
    n_clusters = predictions[0].probs.shape[0] if predictions else 0
    rows = []
    for x, prediction in zip(X, predictions):
        row = {f"x{j + 1}": float(value) for j, value in enumerate(x)}
        row.update(
            {
                f"yhat_{k + 1}": float(prediction.per_cluster_yhat[k])
                for k in range(n_clusters)
            }
        )
        row.update(
            {f"p_{k + 1}": float(prediction.probs[k]) for k in range(n_clusters)}
        )
        row.update(
            {
                "xp": prediction.xp,
                "coerced": prediction.coerced,
                "weighted": prediction.weighted,
                "underflow": prediction.underflow,
            }
        )
        rows.append(row)
    return pd.DataFrame(rows)


def predict_batch(
    X: np.ndarray, model: CLRModel, density: ClusterDensityModel
) -> pd.DataFrame:
    """
    Predictions for every row of X as a table.

    Columns: x1..xp, yhat_1..yhat_K, p_1..p_K, xp, coerced, weighted,
    underflow.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    predictions = [predict(x, model, density) for x in X]
    return _prediction_frame(X, predictions)


def xp_profile(
    grid: np.ndarray, model: CLRModel, density: ClusterDensityModel
) -> pd.DataFrame:
    """Membership probabilities and XP along a one-dimensional grid of x."""
    if model.p != 1:
        raise ShapeMismatchError(f"XP profiles need p=1, model has p={model.p}")
    grid = np.asarray(grid, dtype=float).reshape(-1, 1)
    return predict_batch(grid, model, density)
