"""
Potential Weights Linear Analysis

The three preprocessing phases: column normalization by the column average,
per-row standardization of the normalized matrix and extraction of the
potential weights, and weight-driven dimension reduction. ``fit`` runs them
end to end and returns a PwlaModel.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from dataset import Dataset
from utils import ConfigError


logger = logging.getLogger(__name__)

AXES = ("row", "column")

# Spread at or below this fraction of the row magnitude counts as zero
ZERO_SPREAD_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class NormalizedMatrix:
    """
    Ratio-to-average matrix C with the divisors that produced it

    column_averages holds the divisor actually used per column: the column
    mean, or 1.0 for columns whose mean is zero (listed in degenerate_columns).
    """
    values: np.ndarray
    column_averages: np.ndarray
    degenerate_columns: Tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class RowStats:
    """Per-row mean and population standard deviation of the normalized matrix"""
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class ReductionPolicy:
    """
    How many attributes survive dimension reduction

    kind is one of "keep-all", "top-k" or "above-mean"; k is only used by top-k.
    """
    kind: str = "keep-all"
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("keep-all", "top-k", "above-mean"):
            raise ConfigError(f"unknown reduction policy '{self.kind}'")
        if self.kind == "top-k" and (self.k is None or self.k <= 0):
            raise ConfigError(f"top-k needs a positive k, got {self.k}")

    @classmethod
    def parse(cls, text: str) -> "ReductionPolicy":
        """
        Parse "keep-all", "above-mean" or "top-k:K"

        Args:
            text (str): Policy text from the command line

        Returns:
            ReductionPolicy: Parsed policy
        """
        text = (text or "keep-all").strip().lower()
        if text in ("keep-all", "above-mean"):
            return cls(kind=text)
        if text.startswith("top-k:"):
            try:
                k = int(text.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"invalid top-k count in '{text}'")
            return cls(kind="top-k", k=k)
        raise ConfigError(f"unknown reduction policy '{text}' (expected keep-all, above-mean or top-k:K)")

    def __str__(self) -> str:
        return f"top-k:{self.k}" if self.kind == "top-k" else self.kind


@dataclass(frozen=True, eq=False)
class PwlaModel:
    """
    Fitted PWLA preprocessing: column divisors, potential weights, kept attributes
    """
    column_averages: np.ndarray
    weights: np.ndarray
    kept_indices: Tuple[int, ...]
    axis: str = "row"
    attribute_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        averages = np.asarray(self.column_averages, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        kept = tuple(int(i) for i in self.kept_indices)

        if averages.ndim != 1 or weights.shape != averages.shape:
            raise ValueError(f"weights {weights.shape} and column averages {averages.shape} must be equal-length vectors")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("potential weights must be finite and non-negative")
        if not kept:
            raise ValueError("kept_indices must not be empty")
        if any(b <= a for a, b in zip(kept, kept[1:])) or kept[0] < 0 or kept[-1] >= weights.size:
            raise ValueError(f"kept_indices must be strictly increasing within [0, {weights.size})")

        for name, array in (("column_averages", averages), ("weights", weights)):
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        object.__setattr__(self, "kept_indices", kept)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    @property
    def n_attributes(self) -> int:
        return int(self.weights.size)

    @property
    def kept_weights(self) -> np.ndarray:
        return self.weights[list(self.kept_indices)]

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "column_averages": [float(v) for v in self.column_averages],
            "weights": [float(v) for v in self.weights],
            "kept_indices": list(self.kept_indices),
            "axis": self.axis,
        }
        if self.attribute_names:
            data["attribute_names"] = list(self.attribute_names)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PwlaModel":
        return cls(
            column_averages=np.asarray(data["column_averages"], dtype=np.float64),
            weights=np.asarray(data["weights"], dtype=np.float64),
            kept_indices=tuple(data["kept_indices"]),
            axis=data.get("axis", "row"),
            attribute_names=tuple(data.get("attribute_names", ())),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _matrix(x: Union[np.ndarray, Sequence]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ConfigError(f"expected a non-empty 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ConfigError("matrix contains NaN or infinite values")
    return x


def normalize(x: np.ndarray) -> NormalizedMatrix:
    """
    Divide every column by its arithmetic mean

    Columns with a zero mean pass through unscaled (divisor 1) and a warning
    is logged.

    Args:
        x (np.ndarray): Raw n x m matrix

    Returns:
        NormalizedMatrix: C = X / Ave with the divisors used
    """
    x = _matrix(x)
    averages = x.mean(axis=0)
    degenerate = np.flatnonzero(averages == 0.0)
    if degenerate.size:
        logger.warning(f"Columns {degenerate.tolist()} have zero mean; leaving them unscaled")
        averages = averages.copy()
        averages[degenerate] = 1.0
    return NormalizedMatrix(
        values=x / averages,
        column_averages=averages,
        degenerate_columns=tuple(int(i) for i in degenerate),
    )


def row_stats(c: NormalizedMatrix) -> RowStats:
    """Per-row mean and population (divide-by-m) standard deviation"""
    values = c.values
    return RowStats(mu=values.mean(axis=1), sigma=values.std(axis=1))


def _standardize(values: np.ndarray, axis: int) -> np.ndarray:
    mean = values.mean(axis=axis, keepdims=True)
    sigma = values.std(axis=axis, keepdims=True)
    # Zero-spread rows (or columns) contribute nothing. Rounding in the mean
    # leaves sigma a few ulps above zero for a run of equal values.
    flat = sigma <= ZERO_SPREAD_RTOL * np.maximum(1.0, np.abs(mean))
    safe = np.where(flat, 1.0, sigma)
    return np.where(flat, 0.0, (values - mean) / safe)


def standardize_rows(c: NormalizedMatrix, axis: str = "row") -> np.ndarray:
    """
    Standard normalized values Z of the normalized matrix

    With axis="row" (the algorithm's reading) each row is centred on its own
    mean and divided by its population standard deviation; rows with zero
    spread give Z = 0. axis="column" applies the same transform per column.

    Args:
        c (NormalizedMatrix): Output of normalize
        axis (str): "row" or "column"

    Returns:
        np.ndarray: Z matrix with the shape of c.values
    """
    if axis not in AXES:
        raise ConfigError(f"unknown standardization axis '{axis}' (expected row or column)")
    return _standardize(c.values, 1 if axis == "row" else 0)


def potential_weights(z: np.ndarray) -> np.ndarray:
    """W_m = mean over rows of |Z_nm|"""
    return np.abs(np.asarray(z, dtype=np.float64)).mean(axis=0)


def reduce_dimensions(weights: Sequence[float], policy: ReductionPolicy) -> Tuple[int, ...]:
    """
    Select the attribute indices that survive reduction

    top-k keeps the k largest weights (ties go to the lower index);
    above-mean keeps weights at or above the mean weight and falls back to
    the single largest weight if that would keep nothing.

    Args:
        weights: Potential weights, one per attribute
        policy (ReductionPolicy): Reduction rule

    Returns:
        Tuple[int, ...]: Kept indices in increasing order
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ConfigError("weights must be a non-empty vector")

    if policy.kind == "keep-all":
        return tuple(range(w.size))

    # Stable sort on -w keeps lower indices first among equal weights
    ranked = np.argsort(-w, kind="stable")

    if policy.kind == "top-k":
        if policy.k > w.size:
            raise ConfigError(f"top-k:{policy.k} exceeds the {w.size} available attributes")
        return tuple(sorted(int(i) for i in ranked[:policy.k]))

    kept = np.flatnonzero(w >= w.mean())
    if kept.size == 0:
        kept = ranked[:1]
    return tuple(sorted(int(i) for i in kept))


def fit(ds: Union[Dataset, np.ndarray],
        policy: Optional[ReductionPolicy] = None,
        axis: str = "row") -> PwlaModel:
    """
    Run normalization, pre-training and dimension reduction

    Each phase is one pass over the n x m matrix.

    Args:
        ds: Dataset (or bare feature matrix) to analyse
        policy (ReductionPolicy): Reduction rule, keep-all by default
        axis (str): Standardization axis, "row" unless testing the column reading

    Returns:
        PwlaModel: Divisors, potential weights and kept attributes
    """
    policy = policy or ReductionPolicy()
    features = ds.features if isinstance(ds, Dataset) else ds
    names = ds.attribute_names if isinstance(ds, Dataset) else ()

    normalized = normalize(features)
    z = standardize_rows(normalized, axis=axis)
    weights = potential_weights(z)
    kept = reduce_dimensions(weights, policy)

    label = ds.name if isinstance(ds, Dataset) else "matrix"
    logger.info(f"PWLA fit on {label}: {weights.size} weights, {len(kept)} kept ({policy})")
    return PwlaModel(
        column_averages=normalized.column_averages,
        weights=weights,
        kept_indices=kept,
        axis=axis,
        attribute_names=names,
    )
