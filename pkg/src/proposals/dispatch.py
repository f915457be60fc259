"""
Split proposal dispatch used by cluster revival and recombination.

One of the two splitting algorithms is chosen with equal probability; the
other is tried when the first fails, and a perturbed copy of the parent
vector is returned when both fail so callers always receive a pair.
"""

import logging
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np

from src.models.problem_models import SplitParams
from src.proposals.center_split import center_point_split
from src.proposals.kflat import edge_point_kflat
from src.utils.clr_exceptions import (
    CLRError,
    DegenerateClusterError,
    ProposalFailedError,
    VerticalHyperplaneError,
)

logger = logging.getLogger(__name__)

SplitMethod = Literal["edge_point", "center_point", "perturbation"]

PERTURBATION_SCALE = 0.1

_RECOVERABLE = (
    ProposalFailedError,
    VerticalHyperplaneError,
    DegenerateClusterError,
    np.linalg.LinAlgError,
    ValueError,
)


@dataclass
class SplitProposal:
    """Two regression vectors replacing one supercluster"""

    betas: List[np.ndarray]
    method: SplitMethod

    @property
    def is_fallback(self) -> bool:
        return self.method == "perturbation"


def choose_split_method(rng: np.random.Generator) -> SplitMethod:
    """Pick edge-point or center-point splitting with probability 1/2 each."""
    return "edge_point" if rng.random() < 0.5 else "center_point"


def perturbation_pair(
    beta0: np.ndarray, rng: np.random.Generator
) -> List[np.ndarray]:
    """β₀ ± ε·u for a random unit vector u, ε = 0.1‖β₀‖ (0.1 if β₀ = 0)."""
    beta0 = np.asarray(beta0, dtype=float).ravel()
    norm = float(np.linalg.norm(beta0))
    epsilon = PERTURBATION_SCALE * (norm if norm > 0 else 1.0)
    direction = rng.standard_normal(beta0.shape[0])
    direction /= np.linalg.norm(direction)
    return [beta0 + epsilon * direction, beta0 - epsilon * direction]


def _run(
    method: SplitMethod,
    Xs: np.ndarray,
    ys: np.ndarray,
    beta0: np.ndarray,
    params: SplitParams,
    rng: np.random.Generator,
) -> List[np.ndarray]:
    if method == "edge_point":
        betas = edge_point_kflat(Xs, ys, beta0, params, rng)
    else:
        betas = center_point_split(Xs, ys, beta0, params)
    if not all(np.all(np.isfinite(beta)) for beta in betas):
        raise ProposalFailedError(method, "non-finite regression vector")
    return betas


def propose_split(
    Xs: np.ndarray,
    ys: np.ndarray,
    beta0: np.ndarray,
    params: Optional[SplitParams] = None,
    rng: Optional[np.random.Generator] = None,
) -> SplitProposal:
    """
    Propose two regression vectors for the points attracted by beta0.

    Args:
        Xs: Sub-population predictors, M x p
        ys: Sub-population responses, length M
        beta0: Supercluster regression vector
        params: Split parameters (defaults when omitted)
        rng: Random generator for the method choice and the algorithms

    Returns:
        SplitProposal with two finite vectors and the method that produced them
    """
    params = params or SplitParams()
    rng = rng if rng is not None else np.random.default_rng()

    first = choose_split_method(rng)
    second: SplitMethod = "center_point" if first == "edge_point" else "edge_point"

    for method in (first, second):
        try:
            betas = _run(method, Xs, ys, beta0, params, rng)
            return SplitProposal(betas=betas, method=method)
        except _RECOVERABLE as e:
            details = e.details if isinstance(e, CLRError) else str(e)
            logger.debug(f"Split method {method} failed: {details}")

    logger.warning(
        f"Both split methods failed on {len(np.atleast_1d(ys))} points; "
        "using a perturbed parent vector"
    )
    return SplitProposal(betas=perturbation_pair(beta0, rng), method="perturbation")
