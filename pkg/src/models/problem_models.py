"""
Pydantic models for problem generation and fitting configuration
References: docs/algorithms.md - Configuration section
"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def split_sizes(proportions: List[float], total_n: int) -> List[int]:
    """
    Split total_n into integer cluster sizes by proportions.

    Remainders from flooring go to the clusters with the largest
    fractional parts so that the sizes always sum to total_n.
    """
    if total_n <= 0:
        raise ValueError(f"total_n must be positive: {total_n}")
    if any(share <= 0 for share in proportions):
        raise ValueError(f"Proportions must be positive, got {proportions}")

    total_share = float(sum(proportions))
    exact = [total_n * share / total_share for share in proportions]
    sizes = [int(value) for value in exact]
    remainder = total_n - sum(sizes)
    order = sorted(range(len(exact)), key=lambda k: exact[k] - sizes[k], reverse=True)
    for k in order[:remainder]:
        sizes[k] += 1
    return sizes


class ProblemSpec(BaseModel):
    """Generator parameters for one randomized CLR problem"""

    model_config = ConfigDict(extra="forbid")

    K: int = Field(..., ge=2)
    p: int = Field(..., ge=1)
    cluster_sizes: List[int]
    dp: float = Field(0.2, ge=0.0, lt=1.0)
    eta: float = Field(0.2, ge=0.0)
    delta: float = Field(0.0, ge=0.0)
    corrupt_frac: float = Field(0.0, ge=0.0, lt=1.0)
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("cluster_sizes")
    @classmethod
    def sizes_positive(cls, v):
        """Ensure every cluster has at least one row"""
        if any(size <= 0 for size in v):
            raise ValueError(f"Cluster sizes must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def sizes_match_clusters(self):
        """Ensure one size per cluster"""
        if len(self.cluster_sizes) != self.K:
            raise ValueError(
                f"Expected {self.K} cluster sizes, got {len(self.cluster_sizes)}"
            )
        return self

    @property
    def N(self) -> int:
        """Total number of observations"""
        return int(sum(self.cluster_sizes))

    @classmethod
    def from_proportions(
        cls, proportions: List[float], total_n: int, **kwargs
    ) -> "ProblemSpec":
        """Build a spec whose cluster sizes split total_n by proportions"""
        sizes = split_sizes(proportions, total_n)
        return cls(K=len(proportions), cluster_sizes=sizes, **kwargs)


class EMConfig(BaseModel):
    """Configuration for the EM and EM_is fitting loops"""

    model_config = ConfigDict(extra="forbid")

    K: int = Field(..., ge=1)
    zeta: float = Field(0.0, ge=0.0, lt=1.0)
    max_loop: int = Field(500, gt=0)
    conv_window: int = Field(7, ge=2)
    conv_tol: float = Field(1e-2, gt=0.0)
    collapse_frac: float = Field(0.10, gt=0.0)
    perturb_count: int = Field(10, ge=0)
    sigma_floor_rel: float = Field(1e-6, gt=0.0)
    init: Literal["kmeans", "random"] = "kmeans"
    early_terminate_rounds: int = Field(2, ge=1)
    # Per-row noise variance of the data, known from outside the fit;
    # None disables early termination
    noise_floor: Optional[float] = Field(None, gt=0.0)
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def collapse_below_even_share(self):
        """Ensure the collapse threshold leaves room for K even clusters"""
        if self.K > 1 and self.collapse_frac >= 1.0 / self.K:
            raise ValueError(
                f"collapse_frac must be below 1/K={1.0 / self.K:.3f}, "
                f"got {self.collapse_frac}"
            )
        return self


class SplitParams(BaseModel):
    """Parameters of the two supercluster splitting algorithms"""

    model_config = ConfigDict(extra="forbid")

    f_range: Tuple[float, float] = (5.0, 15.0)
    k_nn: Optional[int] = Field(None, ge=2)
    xi: float = Field(3.0, gt=0.0)
    theta_pairs: List[Tuple[float, float]] = [(45.0, 55.0), (25.0, 75.0), (5.0, 95.0)]
    optimize_steps: int = Field(0, ge=0)
    theta_pca: float = Field(1e-8, gt=0.0, lt=1.0)
    gamma_scan_points: int = Field(32, ge=4)
    gamma_rel_tol: float = Field(1e-3, gt=0.0)

    @field_validator("f_range")
    @classmethod
    def f_range_ordered(cls, v):
        """Ensure the shortlist percentile range is a valid interval"""
        low, high = v
        if not 0 < low <= high < 100:
            raise ValueError(f"f_range must satisfy 0 < low <= high < 100, got {v}")
        return v

    @field_validator("theta_pairs")
    @classmethod
    def theta_pairs_straddle_median(cls, v):
        """Ensure each percentile slab straddles the median"""
        if not v:
            raise ValueError("At least one percentile range is required")
        for low, high in v:
            if not 0 < low < 50 < high < 100:
                raise ValueError(
                    f"Percentile range must satisfy 0 < low < 50 < high < 100, "
                    f"got ({low}, {high})"
                )
        return v


class EliteParams(BaseModel):
    """Archive size and filtering thresholds for elite recombination"""

    model_config = ConfigDict(extra="forbid")

    capacity: int = Field(5, ge=1)
    t_s1: float = Field(0.5, ge=-1.0, le=1.0)
    t_s2: float = Field(0.8, ge=0.0, le=1.0)
    t_s3: Optional[float] = Field(None, ge=0.0, lt=1.0)
    max_len: int = Field(7, ge=2)

    def small_cluster_threshold(self, n_clusters: int) -> float:
        """Minimum cluster share kept as a proposal, 1/(3K) unless overridden"""
        if self.t_s3 is not None:
            return self.t_s3
        return 1.0 / (3.0 * n_clusters)
