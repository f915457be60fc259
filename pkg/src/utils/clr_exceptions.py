"""
Custom exceptions for clusterwise regression fitting and benchmarking.

This module defines specific exception types for the numerical failure
scenarios met while generating problems, fitting CLR models and proposing
cluster splits, so callers can decide whether to recover or abort.

References:
    - docs/algorithms.md: Failure handling in the EM engines
    - src/engine/em_engine.py: recovery strategies per error type
"""

from typing import Optional


class CLRError(Exception):
    """Base exception for all clusterwise-regression errors"""

    def __init__(self, component: str, details: str, recoverable: bool = True):
        self.component = component
        self.details = details
        self.recoverable = recoverable
        super().__init__(f"{component} error: {details}")


class DimensionError(CLRError, ValueError):
    """Raised when the input dimension cannot host K regression directions"""

    def __init__(self, n_clusters: int, dimension: int):
        self.n_clusters = n_clusters
        self.dimension = dimension
        super().__init__(
            "generator",
            f"dimension too small for K directions (K={n_clusters}, p={dimension})",
            recoverable=False,
        )


class DegenerateClusterError(CLRError):
    """Raised when a weighted design matrix is rank deficient"""

    def __init__(self, details: str, cluster: Optional[int] = None):
        self.cluster = cluster
        label = f" (cluster {cluster})" if cluster is not None else ""
        super().__init__("regression", f"degenerate cluster{label}: {details}")


class VerticalHyperplaneError(CLRError):
    """Raised when a projected hyperplane has no response component"""

    def __init__(self, response_coefficient: float):
        self.response_coefficient = response_coefficient
        super().__init__(
            "transform",
            "vertical hyperplane: response coefficient vanishes "
            f"(b_y={response_coefficient:.3e})",
        )


class ProposalFailedError(CLRError):
    """Raised when a split proposal cannot be produced from the given points"""

    def __init__(self, method: str, details: str):
        self.method = method
        super().__init__("proposal", f"proposal failed in {method}: {details}")


class ShapeMismatchError(CLRError, ValueError):
    """Raised when arrays, models and datasets disagree on N, p or K"""

    def __init__(self, details: str):
        super().__init__("shape", details, recoverable=False)


class DatasetFormatError(CLRError, ValueError):
    """Raised when a dataset, model or truth file cannot be parsed"""

    def __init__(self, path: str, details: str):
        self.path = path
        super().__init__("io", f"{path}: {details}", recoverable=False)


def classify_fit_error(error: Exception) -> str:
    """
    Map an exception raised during a fit to a short failure code.

    Args:
        error: The exception caught by the sweep runner or CLI

    Returns:
        Failure code stored in result records
    """
    if isinstance(error, DimensionError):
        return "dimension"
    if isinstance(error, DegenerateClusterError):
        return "degenerate"
    if isinstance(error, VerticalHyperplaneError):
        return "vertical_hyperplane"
    if isinstance(error, ProposalFailedError):
        return "proposal"
    if isinstance(error, ShapeMismatchError):
        return "shape"
    if isinstance(error, DatasetFormatError):
        return "format"

    error_str = str(error).lower()

    if any(keyword in error_str for keyword in ["singular", "rank", "svd"]):
        return "linalg"

    if any(keyword in error_str for keyword in ["nan", "inf", "overflow"]):
        return "numeric"

    return "unexpected"
