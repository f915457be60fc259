"""
Reading and writing datasets, models, densities and ground truth.

Datasets are CSV files with columns x1..xp, y and an optional integer label
column. Models, densities and truths are JSON documents validated by the
pydantic models in src/models/document_models.py.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Type, TypeVar, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from src.models.clr_models import ClusterDensityModel, CLRModel, Dataset, GroundTruth
from src.models.document_models import (
    DensityDocument,
    ModelDocument,
    Provenance,
    TruthDocument,
)
from src.utils.clr_exceptions import DatasetFormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
DocumentT = TypeVar("DocumentT", bound=BaseModel)

LABEL_COLUMN = "label"
RESPONSE_COLUMN = "y"


def _require_file(path: Path) -> None:
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    if not path.is_file():
        raise DatasetFormatError(str(path), "not a regular file")


def write_dataset(ds: Dataset, path: PathLike, include_labels: bool = True) -> Path:
    """Write a dataset as CSV with columns x1..xp, y[, label]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    frame = pd.DataFrame(ds.X, columns=[f"x{j + 1}" for j in range(ds.p)])
    frame[RESPONSE_COLUMN] = ds.y
    if include_labels and ds.labels is not None:
        frame[LABEL_COLUMN] = ds.labels
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_dataset(path: PathLike) -> Dataset:
    """
    Read a dataset CSV written by write_dataset or by hand.

    Raises:
        FileNotFoundError: If the file does not exist
        DatasetFormatError: If columns are missing or values are not numeric
    """
    path = Path(path)
    _require_file(path)

    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetFormatError(str(path), f"unreadable CSV: {e}") from e

    x_columns = [c for c in frame.columns if c.startswith("x") and c[1:].isdigit()]
    x_columns.sort(key=lambda c: int(c[1:]))
    if not x_columns or RESPONSE_COLUMN not in frame.columns:
        raise DatasetFormatError(
            str(path), f"expected columns x1..xp and y, found {list(frame.columns)}"
        )
    if x_columns != [f"x{j + 1}" for j in range(len(x_columns))]:
        raise DatasetFormatError(
            str(path), f"predictor columns not contiguous: {x_columns}"
        )

    try:
        X = frame[x_columns].to_numpy(dtype=float)
        y = frame[RESPONSE_COLUMN].to_numpy(dtype=float)
        labels = (
            frame[LABEL_COLUMN].to_numpy(dtype=int)
            if LABEL_COLUMN in frame.columns
            else None
        )
    except (ValueError, TypeError) as e:
        raise DatasetFormatError(str(path), f"non-numeric values: {e}") from e

    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DatasetFormatError(str(path), "missing or non-finite values")

    logger.debug(f"Read dataset {path}: N={X.shape[0]}, p={X.shape[1]}")
    return Dataset(X=X, y=y, labels=labels)


def read_predictors(path: PathLike, p: Optional[int] = None) -> np.ndarray:
    """Read the x1..xp columns of a CSV; other columns are ignored."""
    path = Path(path)
    _require_file(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetFormatError(str(path), f"unreadable CSV: {e}") from e

    x_columns = [c for c in frame.columns if c.startswith("x") and c[1:].isdigit()]
    x_columns.sort(key=lambda c: int(c[1:]))
    if not x_columns:
        raise DatasetFormatError(str(path), "no predictor columns x1..xp")
    if p is not None and len(x_columns) != p:
        raise DatasetFormatError(
            str(path), f"expected {p} predictor columns, found {len(x_columns)}"
        )
    return frame[x_columns].to_numpy(dtype=float)


def _write_document(document: BaseModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2), encoding="utf-8")
    return path


def _read_document(path: PathLike, document_type: Type[DocumentT]) -> DocumentT:
    path = Path(path)
    _require_file(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return document_type.model_validate(payload)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(str(path), f"invalid JSON: {e}") from e
    except ValidationError as e:
        raise DatasetFormatError(
            str(path), f"invalid {document_type.__name__}: {e.error_count()} errors"
        ) from e


def write_model(
    model: CLRModel,
    path: PathLike,
    include_weights: bool = False,
    provenance: Optional[Provenance] = None,
    fit: Optional[dict] = None,
    elite: Optional[list] = None,
) -> Path:
    document = ModelDocument.from_model(
        model,
        include_weights=include_weights,
        provenance=provenance or Provenance(),
        fit=fit or {},
        elite=elite or [],
    )
    return _write_document(document, path)


def read_model(path: PathLike) -> CLRModel:
    return _read_document(path, ModelDocument).to_model()


def write_density(density: ClusterDensityModel, path: PathLike) -> Path:
    return _write_document(DensityDocument.from_density(density), path)


def read_density(path: PathLike) -> ClusterDensityModel:
    return _read_document(path, DensityDocument).to_density()


def write_truth(truth: GroundTruth, path: PathLike) -> Path:
    return _write_document(TruthDocument.from_truth(truth), path)


def read_truth(path: PathLike) -> GroundTruth:
    return _read_document(path, TruthDocument).to_truth()
