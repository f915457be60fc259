"""
Pydantic documents for model, density and ground-truth files
References: docs/algorithms.md - File formats section
"""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.clr_models import ClusterDensityModel, CLRModel, GroundTruth
from src.models.problem_models import ProblemSpec


class Provenance(BaseModel):
    """Where a document came from"""

    seed: Optional[int] = None
    config_hash: Optional[str] = None
    algorithm: Optional[str] = None
    source: Optional[str] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)


class ModelDocument(BaseModel):
    """Serialized CLRModel: K x (p+1) regression vectors, scales and mix"""

    model_config = ConfigDict(extra="forbid")

    beta: List[List[float]]
    sigma: List[float]
    mix: List[float]
    weights: Optional[List[List[float]]] = None
    fit: Dict[str, Any] = Field(default_factory=dict)
    elite: List[Dict[str, Any]] = Field(default_factory=list)
    provenance: Provenance = Field(default_factory=Provenance)

    @model_validator(mode="after")
    def consistent_cluster_count(self):
        """Ensure beta, sigma and mix describe the same clusters"""
        n_clusters = len(self.beta)
        if n_clusters == 0:
            raise ValueError("Model needs at least one regression vector")
        if len({len(row) for row in self.beta}) != 1:
            raise ValueError("All regression vectors must have the same length")
        if len(self.sigma) != n_clusters or len(self.mix) != n_clusters:
            raise ValueError(
                f"beta has {n_clusters} rows but sigma has {len(self.sigma)} "
                f"and mix has {len(self.mix)}"
            )
        return self

    @classmethod
    def from_model(
        cls,
        model: CLRModel,
        include_weights: bool = False,
        **kwargs: Any,
    ) -> "ModelDocument":
        return cls(
            beta=model.beta.tolist(),
            sigma=model.sigma.tolist(),
            mix=model.mix.tolist(),
            weights=(
                model.weights.tolist()
                if include_weights and model.weights is not None
                else None
            ),
            **kwargs,
        )

    def to_model(self) -> CLRModel:
        return CLRModel(
            beta=np.array(self.beta),
            sigma=np.array(self.sigma),
            weights=None if self.weights is None else np.array(self.weights),
            mix=np.array(self.mix),
        )


class DensityDocument(BaseModel):
    """Serialized ClusterDensityModel"""

    model_config = ConfigDict(extra="forbid")

    means: List[List[float]]
    covariances: List[List[List[float]]]
    mix: List[float]
    active: List[bool]

    @classmethod
    def from_density(cls, density: ClusterDensityModel) -> "DensityDocument":
        return cls(
            means=density.means.tolist(),
            covariances=density.covariances.tolist(),
            mix=density.mix.tolist(),
            active=[bool(a) for a in density.active],
        )

    def to_density(self) -> ClusterDensityModel:
        return ClusterDensityModel(
            means=np.array(self.means, dtype=float),
            covariances=np.array(self.covariances, dtype=float),
            mix=np.array(self.mix, dtype=float),
            active=np.array(self.active, dtype=bool),
        )


class TruthDocument(BaseModel):
    """Serialized GroundTruth of a generated problem"""

    model_config = ConfigDict(extra="forbid")

    beta: List[List[float]]
    sigma: List[float]
    labels: List[int]
    spec: Optional[ProblemSpec] = None

    @classmethod
    def from_truth(cls, truth: GroundTruth) -> "TruthDocument":
        return cls(
            beta=truth.beta.tolist(),
            sigma=truth.sigma.tolist(),
            labels=[int(label) for label in truth.labels],
            spec=truth.spec,
        )

    def to_truth(self) -> GroundTruth:
        return GroundTruth(
            beta=np.array(self.beta),
            sigma=np.array(self.sigma),
            labels=np.array(self.labels, dtype=int),
            spec=self.spec,
        )
