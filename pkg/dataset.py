"""
Dataset representation, UCI file ingestion and stratified folds

This module provides the Dataset record every other module consumes,
loaders for the builtin XOR table and the UCI SPECT, SPECTF and BUPA
files (plus a generic CSV format), and the stratified fold plan used by
the 10-fold protocol.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.model_selection import StratifiedKFold

from utils import ConfigError, atomic_write_text


logger = logging.getLogger(__name__)

FORMATS = ("xor-builtin", "spect", "spectf", "bupa", "generic-csv")

# Format aliases accepted on the command line
FORMAT_ALIASES = {
    "xor": "xor-builtin",
    "csv": "generic-csv",
    "generic": "generic-csv",
}

XOR_FEATURES = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))
XOR_LABELS = (0, 1, 1, 0)

# BUPA "selector" field -> canonical class
BUPA_SELECTOR_MAP = {1.0: 0, 2.0: 1}


class DatasetError(Exception):
    """Raised when a dataset file cannot be loaded or violates the Dataset invariants"""


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Feature matrix with canonical binary labels and attribute names

    features is an n x m float64 matrix of finite values; labels holds one
    class per row in {0, 1}. Arrays are read-only after construction.
    """
    features: np.ndarray
    labels: np.ndarray
    attribute_names: Tuple[str, ...]
    name: str

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)

        if features.ndim != 2:
            raise DatasetError(f"{self.name}: features must be a 2-D matrix, got {features.ndim}-D")
        n, m = features.shape
        if n < 1 or m < 1:
            raise DatasetError(f"{self.name}: features must have at least one row and one column")
        if not np.all(np.isfinite(features)):
            raise DatasetError(f"{self.name}: features contain NaN or infinite values")
        if labels.ndim != 1 or labels.shape[0] != n:
            raise DatasetError(f"{self.name}: expected {n} labels, got {labels.shape}")
        if not np.all(np.isin(labels, (0, 1))):
            raise DatasetError(f"{self.name}: labels must be canonical 0/1 values")

        names = tuple(str(a) for a in self.attribute_names) if self.attribute_names else default_attribute_names(m)
        if len(names) != m:
            raise DatasetError(f"{self.name}: {len(names)} attribute names for {m} columns")

        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", _frozen(labels.astype(np.int64)))
        object.__setattr__(self, "attribute_names", names)

    @property
    def n_instances(self) -> int:
        return self.features.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> Tuple[int, int]:
        """Number of instances labelled 0 and 1"""
        counts = np.bincount(self.labels, minlength=2)
        return int(counts[0]), int(counts[1])

    def require_both_classes(self) -> "Dataset":
        """
        Check the two-class invariant

        Loaded datasets and training sets must contain both classes; test
        folds are allowed to hold a single class.

        Returns:
            Dataset: self, for chaining
        """
        zeros, ones = self.class_counts()
        if zeros == 0 or ones == 0:
            raise DatasetError(f"{self.name}: both classes must be present (class 0: {zeros}, class 1: {ones})")
        return self

    def subset(self, indices: Sequence[int], name: Optional[str] = None) -> "Dataset":
        """Rows selected by index, keeping attribute names"""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            attribute_names=self.attribute_names,
            name=name or self.name,
        )

    def with_features(self, features: np.ndarray, name: Optional[str] = None) -> "Dataset":
        """Same labels on a replacement feature matrix; names are regenerated if the width changes"""
        features = np.asarray(features, dtype=np.float64)
        same_width = features.ndim == 2 and features.shape[1] == self.n_attributes
        return Dataset(
            features=features,
            labels=self.labels,
            attribute_names=self.attribute_names if same_width else default_attribute_names(features.shape[-1]),
            name=name or self.name,
        )


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """
    Stratified assignment of every instance to one of k folds
    """
    k: int
    assignments: np.ndarray

    def __post_init__(self):
        assignments = np.asarray(self.assignments, dtype=np.int64)
        if self.k < 2:
            raise ConfigError(f"fold count must be at least 2, got {self.k}")
        if assignments.ndim != 1 or assignments.size == 0:
            raise DatasetError("fold assignments must be a non-empty 1-D array")
        if assignments.min() < 0 or assignments.max() >= self.k:
            raise DatasetError(f"fold assignments must lie in [0, {self.k})")
        sizes = np.bincount(assignments, minlength=self.k)
        if np.any(sizes == 0):
            raise DatasetError(f"every fold must be non-empty, sizes are {sizes.tolist()}")
        object.__setattr__(self, "assignments", _frozen(assignments))

    def fold_sizes(self) -> List[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def default_attribute_names(count: int) -> Tuple[str, ...]:
    """Generated names attr1 ... attrM"""
    return tuple(f"attr{i}" for i in range(1, count + 1))


def canonical_format(fmt: str) -> str:
    """
    Resolve a format tag or alias to one of FORMATS

    Args:
        fmt (str): Format tag from the caller

    Returns:
        str: Canonical format tag
    """
    tag = FORMAT_ALIASES.get(fmt.lower(), fmt.lower())
    if tag not in FORMATS:
        raise ConfigError(f"unknown dataset format '{fmt}' (expected one of {', '.join(FORMATS)})")
    return tag


def xor_dataset() -> Dataset:
    """The four-instance XOR truth table"""
    return Dataset(
        features=np.array(XOR_FEATURES, dtype=np.float64),
        labels=np.array(XOR_LABELS),
        attribute_names=default_attribute_names(2),
        name="xor",
    )


def _read_cells(path: Path) -> Tuple[List[List[str]], List[int]]:
    """
    Read a comma-separated file as strings, one list per non-blank line

    Returns the cell rows and their 1-based line numbers. Rows shorter than
    the widest row keep their missing cells as None so the caller can name
    the offending line.
    """
    try:
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: file is empty")
    except pd.errors.ParserError as e:
        # pandas reports "Expected N fields in line L, saw M"
        raise DatasetError(f"{path}: parse error: {e}".strip())
    except UnicodeDecodeError as e:
        raise DatasetError(f"{path}: not a text file: {e}")

    rows: List[List[str]] = []
    line_numbers: List[int] = []
    for position, record in enumerate(frame.itertuples(index=False, name=None), 1):
        cells = [None if (isinstance(c, float) and np.isnan(c)) else str(c).strip() for c in record]
        if all(c is None or c == "" for c in cells):
            continue
        rows.append(cells)
        line_numbers.append(position)

    if not rows:
        raise DatasetError(f"{path}: file is empty")
    return rows, line_numbers


def _parse_float(cell: Optional[str], path: Path, line: int, column: int) -> float:
    if cell is None:
        raise DatasetError(f"{path}: line {line}: missing field {column + 1}")
    if cell == "" or cell == "?":
        raise DatasetError(f"{path}: line {line}: missing value in field {column + 1}")
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(f"{path}: line {line}: non-numeric value '{cell}' in field {column + 1}")
    if not np.isfinite(value):
        raise DatasetError(f"{path}: line {line}: non-finite value '{cell}' in field {column + 1}")
    return value


def _is_numeric_row(cells: List[Optional[str]]) -> bool:
    for cell in cells:
        if cell is None:
            continue
        try:
            float(cell)
        except ValueError:
            return False
    return True


def _parse_matrix(path: Path, rows: List[List[str]], line_numbers: List[int]) -> np.ndarray:
    width = len(rows[0])
    values = np.empty((len(rows), width), dtype=np.float64)
    for r, (cells, line) in enumerate(zip(rows, line_numbers)):
        present = sum(1 for c in cells if c is not None)
        if present != width:
            raise DatasetError(f"{path}: line {line}: expected {width} fields, found {present}")
        for c, cell in enumerate(cells):
            values[r, c] = _parse_float(cell, path, line, c)
    return values


def _canonical_labels(raw: np.ndarray, fmt: str, path: Path) -> np.ndarray:
    distinct = np.unique(raw)

    if fmt == "bupa":
        unknown = [v for v in distinct if v not in BUPA_SELECTOR_MAP]
        if unknown:
            raise DatasetError(f"{path}: BUPA selector must be 1 or 2, found {unknown}")
        return np.array([BUPA_SELECTOR_MAP[v] for v in raw], dtype=np.int64)

    if fmt in ("spect", "spectf"):
        if not np.all(np.isin(distinct, (0.0, 1.0))):
            raise DatasetError(f"{path}: {fmt.upper()} diagnosis must be 0 or 1, found {distinct.tolist()}")
        return raw.astype(np.int64)

    if distinct.size != 2:
        raise DatasetError(f"{path}: expected exactly 2 distinct labels, found {distinct.size}: {distinct.tolist()[:10]}")
    if not np.array_equal(distinct, [0.0, 1.0]):
        logger.warning(f"{path}: mapping labels {distinct[0]:g} -> 0 and {distinct[1]:g} -> 1")
    return (raw == distinct[1]).astype(np.int64)


def load_dataset(path: Union[str, Path, None],
                 fmt: str,
                 label_column: Optional[int] = None,
                 name: Optional[str] = None) -> Dataset:
    """
    Load a labelled dataset from disk (or the builtin XOR table)

    SPECT and SPECTF keep the diagnosis in the first column, BUPA keeps the
    selector in the last column, generic CSV takes the label column from
    label_column (default: last) and may start with a header row.

    Args:
        path: File path; ignored for xor-builtin
        fmt (str): One of FORMATS (or an alias)
        label_column (int): Label position for generic-csv, negative counts from the end
        name (str): Dataset name, defaults to the file name

    Returns:
        Dataset: Loaded dataset with canonical 0/1 labels
    """
    fmt = canonical_format(fmt)
    if fmt == "xor-builtin":
        return xor_dataset()

    if path is None:
        raise ConfigError(f"a file path is required for format '{fmt}'")
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: file not found")

    rows, line_numbers = _read_cells(path)

    header: Optional[List[str]] = None
    if fmt == "generic-csv" and not _is_numeric_row(rows[0]):
        header = [c or "" for c in rows[0]]
        rows, line_numbers = rows[1:], line_numbers[1:]
        if not rows:
            raise DatasetError(f"{path}: header row but no data")

    values = _parse_matrix(path, rows, line_numbers)
    width = values.shape[1]
    if header is not None and len(header) != width:
        raise DatasetError(f"{path}: header has {len(header)} fields, data rows have {width}")

    if fmt in ("spect", "spectf"):
        label_at = 0
    elif fmt == "bupa":
        label_at = width - 1
    else:
        label_at = -1 if label_column is None else label_column
        if not -width <= label_at < width:
            raise ConfigError(f"label column {label_at} out of range for {width} fields")
        label_at %= width

    if width < 2:
        raise DatasetError(f"{path}: need at least one attribute column besides the label")

    feature_columns = [c for c in range(width) if c != label_at]
    labels = _canonical_labels(values[:, label_at], fmt, path)
    names = tuple(header[c] for c in feature_columns) if header is not None else default_attribute_names(len(feature_columns))

    dataset = Dataset(
        features=values[:, feature_columns],
        labels=labels,
        attribute_names=names,
        name=name or path.name,
    ).require_both_classes()

    logger.info(f"Loaded {dataset.name} ({fmt}): {dataset.n_instances} instances, {dataset.n_attributes} attributes")
    return dataset


def write_generic_csv(ds: Dataset, path: Union[str, Path]) -> Path:
    """
    Write a dataset in the generic-csv format (header of names plus "label")

    Args:
        ds (Dataset): Dataset to write
        path: Output file, replaced atomically

    Returns:
        Path: The written file
    """
    frame = pd.DataFrame(ds.features, columns=list(ds.attribute_names))
    frame["label"] = ds.labels
    text = frame.to_csv(index=False, lineterminator="\n")
    return atomic_write_text(path, text)


def concat_datasets(first: Dataset, second: Dataset, name: Optional[str] = None) -> Dataset:
    """
    Stack two datasets with the same attributes (e.g. a train and a test split)

    Args:
        first (Dataset): Rows placed first
        second (Dataset): Rows appended after
        name (str): Name of the combined dataset

    Returns:
        Dataset: Combined dataset
    """
    if first.attribute_names != second.attribute_names:
        raise DatasetError(f"cannot combine {first.name} and {second.name}: attribute names differ")
    return Dataset(
        features=np.vstack([first.features, second.features]),
        labels=np.concatenate([first.labels, second.labels]),
        attribute_names=first.attribute_names,
        name=name or f"{first.name}+{second.name}",
    )


def make_folds(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """
    Stratified, seeded assignment of instances to k folds

    When a class has fewer than k instances, k is clamped down to that
    class size (never below 2) and a warning is logged.

    Args:
        ds (Dataset): Dataset to split
        k (int): Requested fold count, at least 2
        seed (int): Shuffle seed; equal seeds give equal plans

    Returns:
        FoldPlan: Fold assignment per instance
    """
    if k < 2:
        raise ConfigError(f"fold count must be at least 2, got {k}")

    counts = [c for c in ds.class_counts() if c > 0]
    effective = min(k, ds.n_instances)
    smallest = min(counts)
    if smallest < effective:
        effective = max(2, smallest)
    if ds.n_instances < 2:
        raise DatasetError(f"{ds.name}: need at least 2 instances to build folds")
    if effective != k:
        logger.warning(f"{ds.name}: smallest class has {smallest} instances, using {effective} folds instead of {k}")

    splitter = StratifiedKFold(n_splits=effective, shuffle=True, random_state=seed)
    assignments = np.empty(ds.n_instances, dtype=np.int64)
    for fold, (_, test_index) in enumerate(splitter.split(ds.features, ds.labels)):
        assignments[test_index] = fold

    return FoldPlan(k=effective, assignments=assignments)
