"""
EM and EM_is fitting loops for clusterwise linear regression.

Both engines iterate the same step: residuals, scale estimates, Gaussian
reweighting, weighted least squares per cluster and an optional momentum
update. EM_is adds Cluster Revival (a collapsed cluster is re-seeded by
splitting a supercluster) and Elite Recombination (on convergence the loop
is reseeded from clusters of the best distinct solutions seen so far).

References:
    - docs/algorithms.md: EM flow, EM_is flow, early termination
    - src/regression/core.py: E-step and M-step primitives
    - src/proposals/dispatch.py: supercluster splits
    - src/elite/recombination.py: reseeding on convergence
"""

import logging
import time
from dataclasses import dataclass
from typing import Literal, Optional, Set

import numpy as np

from src.elite.elite_store import EliteEntry, EliteStore, update_elite
from src.elite.recombination import recombine
from src.engine.convergence import ConvergenceState
from src.engine.trace import JsonlTraceWriter
from src.metrics.resolvability import resolvability
from src.models.clr_models import CLRModel, Dataset, FitResult
from src.models.problem_models import EliteParams, EMConfig, SplitParams
from src.proposals.dispatch import propose_split
from src.regression.core import (
    estimate_sigma,
    fit_betas,
    kmeans_init,
    one_hot,
    random_init,
    residual_matrix,
    reweight,
    sigma_floor_for,
    weighted_least_squares,
    weighted_sse,
)
from src.utils.clr_exceptions import DegenerateClusterError, ShapeMismatchError
from src.utils.numeric_warnings import suppress_numeric_warnings

logger = logging.getLogger(__name__)

Algorithm = Literal["em", "em_is"]

ATTRACTION_THRESHOLD = 0.5
INIT_PERTURBATION = 0.1


@dataclass
class StepResult:
    """Outcome of one EM iteration"""

    beta: np.ndarray
    sigma: np.ndarray
    weights: np.ndarray
    error: float
    degenerate: int
    floor_hits: int


def initial_weights(ds: Dataset, cfg: EMConfig) -> np.ndarray:
    """Initial one-hot weights from k-means or a random assignment."""
    if cfg.init == "random":
        return random_init(ds.N, cfg.K, cfg.seed)
    return kmeans_init(ds, cfg.K, cfg.seed)


def _validate_init(weights: np.ndarray, ds: Dataset, K: int) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (ds.N, K):
        raise ShapeMismatchError(
            f"Initial weights must be {ds.N} x {K}, got {weights.shape}"
        )
    if np.any(weights < 0) or not np.allclose(weights.sum(axis=1), 1.0, atol=1e-8):
        raise ValueError("Initial weights must be row-stochastic")
    return weights


def _initial_betas(
    Xtil: np.ndarray, y: np.ndarray, weights: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """WLS on the initial weights; global OLS plus small perturbations on failure."""
    try:
        return fit_betas(Xtil, y, weights)
    except DegenerateClusterError as e:
        logger.debug(f"Initial M-step degenerate ({e.details}); perturbing global fit")

    global_beta = weighted_least_squares(Xtil, y, np.ones(Xtil.shape[0]))
    scale = INIT_PERTURBATION * max(np.linalg.norm(global_beta), 1.0)
    noise = rng.standard_normal((weights.shape[1], Xtil.shape[1]))
    return global_beta[None, :] + scale * noise


def _estimate_scales(
    residuals: np.ndarray, weights: np.ndarray, sigma_floor: float, fallback: float
):
    sigma = np.empty(weights.shape[1])
    floor_hits = 0
    for k in range(weights.shape[1]):
        if weights[:, k].sum() > 0:
            raw = estimate_sigma(residuals[:, k], weights[:, k])
        else:
            raw = fallback
        if raw <= sigma_floor:
            floor_hits += 1
        sigma[k] = max(raw, sigma_floor)
    return sigma, floor_hits


def _em_step(
    Xtil: np.ndarray,
    y: np.ndarray,
    beta: np.ndarray,
    weights: np.ndarray,
    zeta: float,
    sigma_floor: float,
    spread: float,
) -> StepResult:
    residuals = residual_matrix(Xtil, y, beta)
    sigma, _ = _estimate_scales(residuals, weights, sigma_floor, spread)
    new_weights = reweight(residuals, sigma)

    new_beta = beta.copy()
    degenerate = 0
    for k in range(beta.shape[0]):
        try:
            new_beta[k] = weighted_least_squares(Xtil, y, new_weights[:, k])
        except DegenerateClusterError:
            degenerate += 1

    if zeta > 0:
        new_beta = zeta * beta + (1.0 - zeta) * new_beta

    # Returned sigma describes new_beta under new_weights
    new_residuals = residual_matrix(Xtil, y, new_beta)
    new_sigma, floor_hits = _estimate_scales(
        new_residuals, new_weights, sigma_floor, spread
    )
    error = float(np.sum(new_weights * np.square(new_residuals)))
    return StepResult(new_beta, new_sigma, new_weights, error, degenerate, floor_hits)


def detect_collapse(model: CLRModel, cfg: EMConfig) -> Set[int]:
    """
    Clusters whose total membership weight is below collapse_frac × N.

    Args:
        model: Model with N x K membership weights
        cfg: Engine configuration

    Returns:
        Set of collapsed cluster indices
    """
    if model.weights is None:
        raise ShapeMismatchError("Collapse detection needs membership weights")
    sizes = model.weights.sum(axis=0)
    threshold = cfg.collapse_frac * model.weights.shape[0]
    return {int(k) for k in np.flatnonzero(sizes < threshold)}


def _revive(
    ds: Dataset,
    beta: np.ndarray,
    weights: np.ndarray,
    collapsed: Set[int],
    split_params: SplitParams,
    rng: np.random.Generator,
) -> bool:
    """
    Re-seed the lowest-index collapsed cluster by splitting a donor.

    Updates beta and weights in place and returns True when a split was
    applied.
    """
    target = min(collapsed)
    sizes = weights.sum(axis=0)
    donors = np.array([k for k in range(beta.shape[0]) if k not in collapsed])
    if donors.size == 0 or sizes[donors].sum() <= 0:
        return False
    donor = int(rng.choice(donors, p=sizes[donors] / sizes[donors].sum()))

    attracted = weights[:, donor] > ATTRACTION_THRESHOLD
    if np.count_nonzero(attracted) < ds.p + 2:
        logger.debug(
            f"Revival of cluster {target} skipped: donor {donor} attracts "
            f"{int(np.count_nonzero(attracted))} rows"
        )
        return False

    proposal = propose_split(
        ds.X[attracted], ds.y[attracted], beta[donor], split_params, rng
    )
    beta[donor], beta[target] = proposal.betas[0], proposal.betas[1]

    rows = np.flatnonzero(attracted)
    mass = weights[rows, donor] + weights[rows, target]
    Xtil_rows = ds.xtil()[rows]
    distances = np.abs(ds.y[rows, None] - Xtil_rows @ beta[[donor, target]].T)
    to_donor = distances[:, 0] <= distances[:, 1]
    weights[rows, donor] = np.where(to_donor, mass, 0.0)
    weights[rows, target] = np.where(to_donor, 0.0, mass)

    logger.debug(
        f"Revived cluster {target} from donor {donor} "
        f"({rows.size} rows, {proposal.method})"
    )
    return True


def _at_noise_floor(
    best_error: float, previous_best: Optional[float], N: int, cfg: EMConfig
) -> bool:
    """
    True when the best error sits at the configured noise floor and did not
    move since the previous convergence.

    The floor is cfg.noise_floor, a per-row noise variance supplied from
    outside the fit; without it early termination never fires.
    """
    if cfg.noise_floor is None or previous_best is None:
        return False
    near_floor = best_error / N <= (1.0 + cfg.conv_tol) * cfg.noise_floor
    stable = abs(best_error - previous_best) <= cfg.conv_tol * max(
        previous_best, np.finfo(float).eps
    )
    return near_floor and stable


def _elite_entry(
    ds: Dataset, model: CLRModel, error: float, iterations: int
) -> EliteEntry:
    r_value = None
    if model.K > 1:
        try:
            r_value = resolvability(ds.X, model.beta, model.sigma)
        except ValueError:
            pass
    return EliteEntry(
        model=model.copy(), error=error, iterations=iterations, resolvability=r_value
    )


def _run_loop(
    ds: Dataset,
    cfg: EMConfig,
    init: Optional[np.ndarray],
    algorithm: Algorithm,
    split_params: SplitParams,
    elite_params: EliteParams,
    trace: Optional[JsonlTraceWriter],
) -> FitResult:
    start = time.perf_counter()
    is_variant = algorithm == "em_is"
    rng = np.random.default_rng(cfg.seed)

    Xtil = ds.xtil()
    sigma_floor = sigma_floor_for(ds.y, cfg.sigma_floor_rel)
    spread = float(np.std(ds.y)) or 1.0

    if init is None:
        init = initial_weights(ds, cfg)
    weights = _validate_init(init, ds, cfg.K)
    beta = _initial_betas(Xtil, ds.y, weights, rng)

    state = ConvergenceState(size=cfg.conv_window, conv_tol=cfg.conv_tol)
    store = EliteStore(params=elite_params)
    budget = cfg.perturb_count if is_variant else 0

    best_model: Optional[CLRModel] = None
    best_error = np.inf
    trace_errors = []
    restarts_used = revival_events = floor_hits = iterations = 0
    converged_flag = failed = False
    failure: Optional[str] = None
    stable_rounds = 0
    previous_round_best: Optional[float] = None

    with suppress_numeric_warnings():
        for iteration in range(cfg.max_loop):
            step = _em_step(Xtil, ds.y, beta, weights, cfg.zeta, sigma_floor, spread)
            iterations = iteration + 1
            floor_hits += step.floor_hits

            if step.degenerate == cfg.K:
                failed, failure = True, "degenerate"
                logger.warning(
                    f"All {cfg.K} clusters degenerate at iteration {iteration}"
                )
                break

            beta, weights = step.beta, step.weights
            model = CLRModel(beta=beta.copy(), sigma=step.sigma, weights=weights.copy())
            trace_errors.append(step.error)
            if step.error < best_error:
                best_model, best_error = model, step.error

            event = None
            collapsed: Set[int] = set()
            if is_variant:
                collapsed = detect_collapse(model, cfg)
                revived = bool(collapsed) and _revive(
                    ds, beta, weights, collapsed, split_params, rng
                )
                if revived:
                    revival_events += 1
                    state.reset()
                    event = "revival"

            if event is None:
                state.push(step.error)
                if state.check():
                    event = "converged"

            if event == "converged" and is_variant:
                update_elite(store, _elite_entry(ds, model, step.error, iterations))

                at_floor = _at_noise_floor(best_error, previous_round_best, ds.N, cfg)
                stable_rounds = stable_rounds + 1 if at_floor else 0
                previous_round_best = best_error

                if stable_rounds >= cfg.early_terminate_rounds:
                    event = "early_terminate"
                elif budget > 0:
                    beta = recombine(store, ds, cfg.K, split_params, rng, sigma_floor)
                    residuals = residual_matrix(Xtil, ds.y, beta)
                    weights = one_hot(np.argmin(np.abs(residuals), axis=1), cfg.K)
                    budget -= 1
                    restarts_used += 1
                    state.reset()
                    event = "recombination"

            if trace is not None:
                trace.write(
                    iteration,
                    step.error,
                    best_error,
                    sorted(collapsed),
                    event,
                    revival_events=revival_events,
                    restarts_used=restarts_used,
                )

            if event in ("converged", "early_terminate"):
                converged_flag = True
                break

    if best_model is None:
        sigma, _ = _estimate_scales(
            residual_matrix(Xtil, ds.y, beta), weights, sigma_floor, spread
        )
        best_model = CLRModel(beta=beta, sigma=sigma, weights=weights)
        best_error = weighted_sse(Xtil, ds.y, beta, weights)
        trace_errors.append(best_error)

    if is_variant:
        update_elite(store, _elite_entry(ds, best_model, best_error, iterations))

    if floor_hits:
        logger.debug(f"Sigma floor applied {floor_hits} times")

    result = FitResult(
        best_model=best_model,
        best_error=float(best_error),
        error_trace=[float(e) for e in trace_errors],
        iterations=iterations,
        restarts_used=restarts_used,
        revival_events=revival_events,
        wall_time=time.perf_counter() - start,
        algorithm=algorithm,
        converged=converged_flag,
        failed=failed,
        failure=failure,
        sigma_floor_hits=floor_hits,
        elite=list(store.entries),
    )
    logger.info(
        f"{algorithm} fit: error={result.best_error:.6g}, iterations={iterations}, "
        f"restarts={restarts_used}, revivals={revival_events}, "
        f"converged={converged_flag}"
    )
    return result


def run_em(
    ds: Dataset,
    cfg: EMConfig,
    init: Optional[np.ndarray] = None,
    trace: Optional[JsonlTraceWriter] = None,
) -> FitResult:
    """
    Generic EM for CLR problems.

    Args:
        ds: Dataset to fit
        cfg: Engine configuration
        init: Row-stochastic N x K initial weights (k-means/random per cfg
            when omitted)
        trace: Optional per-iteration trace writer

    Returns:
        FitResult holding the lowest-error model seen
    """
    return _run_loop(ds, cfg, init, "em", SplitParams(), EliteParams(), trace)


def run_em_is(
    ds: Dataset,
    cfg: EMConfig,
    init: Optional[np.ndarray] = None,
    split_params: Optional[SplitParams] = None,
    elite_params: Optional[EliteParams] = None,
    trace: Optional[JsonlTraceWriter] = None,
) -> FitResult:
    """
    EM with Cluster Revival and Elite Recombination.

    cfg.perturb_count is the number of recombinations allowed; with 0 the
    run stops at the first convergence and only revival is active.
    """
    return _run_loop(
        ds,
        cfg,
        init,
        "em_is",
        split_params or SplitParams(),
        elite_params or EliteParams(),
        trace,
    )


def restart_seeds(seed: int, restarts: int) -> list:
    """Seed of every restart; restart 0 keeps the configured seed."""
    sequence = np.random.SeedSequence(seed)
    spawned = sequence.generate_state(max(restarts, 1), dtype=np.uint64)
    return [seed] + [int(s >> np.uint64(1)) for s in spawned[:restarts]]


def run_em_multistart(
    ds: Dataset,
    cfg: EMConfig,
    restarts: int,
    trace: Optional[JsonlTraceWriter] = None,
) -> FitResult:
    """
    Independent EM runs from fresh initializations, keeping the best.

    Args:
        ds: Dataset to fit
        cfg: Engine configuration; restart i > 0 uses a derived seed
        restarts: Number of additional runs after the first
        trace: Optional trace writer shared by all runs

    Returns:
        FitResult of the lowest-error run with summed iterations and time
    """
    if restarts < 0:
        raise ValueError(f"restarts must be non-negative: {restarts}")

    best: Optional[FitResult] = None
    total_iterations = 0
    total_time = 0.0
    for index, seed in enumerate(restart_seeds(cfg.seed, restarts)):
        result = run_em(ds, cfg.model_copy(update={"seed": seed}), trace=trace)
        total_iterations += result.iterations
        total_time += result.wall_time
        logger.debug(f"EM restart {index} (seed {seed}): error={result.best_error:.6g}")
        if best is None or (
            not result.failed
            and (best.failed or result.best_error < best.best_error)
        ):
            best = result

    best.iterations = total_iterations
    best.wall_time = total_time
    best.restarts_used = restarts
    return best


def fit(
    ds: Dataset,
    algorithm: Algorithm,
    cfg: EMConfig,
    restarts: int = 0,
    split_params: Optional[SplitParams] = None,
    elite_params: Optional[EliteParams] = None,
    trace: Optional[JsonlTraceWriter] = None,
) -> FitResult:
    """
    Fit with either engine using the shared restart semantics.

    For "em", restarts are independent multi-starts; for "em_is" they are
    the recombination budget.
    """
    if algorithm == "em":
        if restarts == 0:
            return run_em(ds, cfg, trace=trace)
        return run_em_multistart(ds, cfg, restarts, trace=trace)
    if algorithm == "em_is":
        return run_em_is(
            ds,
            cfg.model_copy(update={"perturb_count": restarts}),
            split_params=split_params,
            elite_params=elite_params,
            trace=trace,
        )
    raise ValueError(f"Unsupported algorithm: {algorithm}")
