"""
Elite recombination: reseed EM_is from clusters of archived solutions.

Each archived solution is broken into single-cluster proposals. Redundant,
weaker and very small proposals are filtered out, and the K-combination of
the survivors with the lowest regression error after one EM pass becomes
the new starting point. With a single distinct solution the smallest
cluster is dropped and a supercluster is split instead.

References:
    - docs/algorithms.md: Elite recombination
    - src/engine/em_engine.py: caller on convergence
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.elite.elite_store import EliteEntry, EliteStore, filter_correlated
from src.models.clr_models import Dataset
from src.models.problem_models import SplitParams
from src.proposals.dispatch import perturbation_pair, propose_split
from src.regression.core import (
    estimate_sigma,
    fit_betas,
    one_hot,
    residual_matrix,
    reweight,
    weighted_sse,
)
from src.utils.clr_exceptions import DegenerateClusterError, ShapeMismatchError

logger = logging.getLogger(__name__)

ATTRACTION_THRESHOLD = 0.5
DUPLICATE_ANGLE = 1e-6


@dataclass
class ClusterProposal:
    """One cluster of an archived solution, offered for recombination"""

    beta: np.ndarray
    size: float
    attracted: np.ndarray
    parent: int
    parent_error: float


def _jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def _slope_cosine(beta_a: np.ndarray, beta_b: np.ndarray) -> float:
    a, b = beta_a[1:], beta_b[1:]
    norms = np.linalg.norm(a) * np.linalg.norm(b)
    if norms == 0:
        return 0.0
    return float(abs(a @ b) / norms)


def is_redundant(a: ClusterProposal, b: ClusterProposal, threshold: float) -> bool:
    """
    Two proposals are redundant when they attract the same rows or share
    a slope direction.

    The slope test needs p > 1; with a single predictor every pair of lines
    would share the slope direction up to sign.
    """
    if _jaccard(a.attracted, b.attracted) > threshold:
        return True
    return a.beta.shape[0] > 2 and _slope_cosine(a.beta, b.beta) > threshold


def build_proposals(entries: List[EliteEntry], n_rows: int) -> List[ClusterProposal]:
    """Split every entry into per-cluster proposals, lowest parent error first."""
    proposals = []
    for index, entry in enumerate(sorted(entries, key=lambda e: e.error)):
        weights = entry.weights
        for k in range(weights.shape[1]):
            proposals.append(
                ClusterProposal(
                    beta=entry.model.beta[k].copy(),
                    size=float(weights[:, k].sum() / n_rows),
                    attracted=weights[:, k] > ATTRACTION_THRESHOLD,
                    parent=index,
                    parent_error=float(entry.error),
                )
            )
    return proposals


def filter_proposals(
    proposals: List[ClusterProposal], redundancy: float, min_size: float
) -> List[ClusterProposal]:
    """Drop proposals redundant with one from a better parent, then small ones."""
    kept: List[ClusterProposal] = []
    for proposal in proposals:
        if any(
            other.parent != proposal.parent
            and is_redundant(proposal, other, redundancy)
            for other in kept
        ):
            continue
        kept.append(proposal)
    return [proposal for proposal in kept if proposal.size >= min_size]


def _hard_refit(ds: Dataset, betas: np.ndarray) -> np.ndarray:
    """Assign rows to the nearest plane and refit each cluster once."""
    Xtil = ds.xtil()
    labels = np.argmin(np.abs(residual_matrix(Xtil, ds.y, betas)), axis=1)
    return fit_betas(Xtil, ds.y, one_hot(labels, betas.shape[0]), fallback=betas)


def _complete_by_splitting(
    ds: Dataset,
    betas: List[np.ndarray],
    K: int,
    params: SplitParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Split clusters chosen with probability ∝ size until there are K."""
    Xtil = ds.xtil()
    betas = [np.asarray(beta, dtype=float) for beta in betas]
    if not betas:
        betas = [fit_betas(Xtil, ds.y, np.ones((ds.N, 1)))[0]]

    while len(betas) < K:
        stacked = np.vstack(betas)
        labels = np.argmin(np.abs(residual_matrix(Xtil, ds.y, stacked)), axis=1)
        sizes = np.bincount(labels, minlength=len(betas)).astype(float)
        donor = int(rng.choice(len(betas), p=sizes / sizes.sum()))
        mask = labels == donor

        proposal = propose_split(ds.X[mask], ds.y[mask], betas[donor], params, rng)
        logger.debug(
            f"Recombination split cluster {donor} ({int(mask.sum())} rows) "
            f"via {proposal.method}"
        )
        betas[donor] = proposal.betas[0]
        betas.append(proposal.betas[1])
    return np.vstack(betas)


def _single_parent(
    entry: EliteEntry,
    ds: Dataset,
    K: int,
    params: SplitParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Drop the smallest cluster of the entry and split a supercluster."""
    sizes = entry.weights.sum(axis=0)
    smallest = int(np.argmin(sizes))
    remaining = [entry.model.beta[k] for k in range(K) if k != smallest]
    return _complete_by_splitting(ds, remaining, K, params, rng)


def _evaluate_combination(
    ds: Dataset, betas: np.ndarray, sigma_floor: float
) -> Optional[float]:
    """Error after hard-assignment scales, one reweight and one WLS pass."""
    Xtil = ds.xtil()
    residuals = residual_matrix(Xtil, ds.y, betas)
    hard = one_hot(np.argmin(np.abs(residuals), axis=1), betas.shape[0])
    if np.any(hard.sum(axis=0) == 0):
        return None
    sigma = np.array(
        [
            estimate_sigma(residuals[:, k], hard[:, k], sigma_floor)
            for k in range(betas.shape[0])
        ]
    )
    if np.any(sigma <= 0):
        return None
    weights = reweight(residuals, sigma)
    try:
        refit = fit_betas(Xtil, ds.y, weights)
    except DegenerateClusterError:
        return None
    return weighted_sse(Xtil, ds.y, refit, weights)


def separate_duplicates(betas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Perturb later copies of (nearly) parallel identical vectors apart."""
    betas = np.array(betas, dtype=float)
    for i, j in itertools.combinations(range(betas.shape[0]), 2):
        a, b = betas[i], betas[j]
        norms = np.linalg.norm(a) * np.linalg.norm(b)
        if norms == 0:
            same = np.allclose(a, b)
        else:
            cosine = np.clip(a @ b / norms, -1.0, 1.0)
            same = np.arccos(cosine) <= DUPLICATE_ANGLE
        if same:
            betas[j] = perturbation_pair(b, rng)[0]
    return betas


def recombine(
    store: EliteStore,
    ds: Dataset,
    K: int,
    params: Optional[SplitParams] = None,
    rng: Optional[np.random.Generator] = None,
    sigma_floor: float = 0.0,
) -> np.ndarray:
    """
    New K regression vectors recombined from the elite archive.

    Args:
        store: Non-empty elite archive
        ds: Dataset being fitted
        K: Number of clusters
        params: Split parameters for the supercluster fallbacks
        rng: Random generator
        sigma_floor: Lower bound for the scale estimates of combinations

    Returns:
        K x (p+1) regression vectors without duplicates
    """
    if not store.entries:
        raise ValueError("Recombination needs a non-empty elite store")
    if store.entries[0].model.K != K:
        raise ShapeMismatchError(
            f"Elite entries have K={store.entries[0].model.K}, expected {K}"
        )
    params = params or SplitParams()
    rng = rng if rng is not None else np.random.default_rng()
    elite = store.params

    entries = filter_correlated(store.entries, elite.t_s1)
    if len(entries) == 1:
        logger.debug("Single distinct elite solution; splitting a supercluster")
        return separate_duplicates(_single_parent(entries[0], ds, K, params, rng), rng)

    proposals = filter_proposals(
        build_proposals(entries, ds.N), elite.t_s2, elite.small_cluster_threshold(K)
    )

    if len(proposals) < K:
        logger.debug(
            f"Only {len(proposals)} proposals for K={K}; refitting and splitting"
        )
        betas = [proposal.beta for proposal in proposals]
        if betas:
            betas = list(_hard_refit(ds, np.vstack(betas)))
        completed = _complete_by_splitting(ds, betas, K, params, rng)
        return separate_duplicates(completed, rng)

    length = min(len(proposals), elite.max_len)
    if len(proposals) > length:
        chosen = np.sort(rng.choice(len(proposals), size=length, replace=False))
        proposals = [proposals[i] for i in chosen]

    best_betas, best_error, evaluated = None, np.inf, 0
    for combination in itertools.combinations(range(length), K):
        betas = np.vstack([proposals[i].beta for i in combination])
        error = _evaluate_combination(ds, betas, sigma_floor)
        evaluated += 1
        if error is not None and error < best_error:
            best_betas, best_error = betas, error

    logger.debug(
        f"Recombination evaluated {evaluated} combinations of {length} proposals, "
        f"best error {best_error:.6g}"
    )
    if best_betas is None:
        return separate_duplicates(_single_parent(entries[0], ds, K, params, rng), rng)
    return separate_duplicates(best_betas, rng)
