"""
One-epoch SMFFNN classifier on top of PWLA

The hidden layer's weighted sum (potential weights) and the output node's
unit-weight sum collapse into a single torque score per instance:
S = sum over kept attributes of C_m * W_m, with C the instance normalized by
the training column averages. Training scores every instance once, sorts the
(score, label) pairs and keeps them as Stack0 / Stack1. Prediction applies a
binary step against those stacks.
"""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from dataset import Dataset
from pwla import PwlaModel
from utils import ConfigError


logger = logging.getLogger(__name__)

PREDICTION_RULES = ("nearest", "interval")


def normalize_instance(model: PwlaModel, instance) -> np.ndarray:
    """Divide a raw instance (or rows of instances) by the fitted column averages"""
    x = np.asarray(instance, dtype=np.float64)
    if x.shape[-1] != model.n_attributes:
        raise ConfigError(f"instance has {x.shape[-1]} attributes, model expects {model.n_attributes}")
    return x / model.column_averages


def score(model: PwlaModel, instance) -> float:
    """
    Torque score of one raw instance

    Args:
        model (PwlaModel): Fitted PWLA model
        instance: Row of raw attribute values (pre-reduction length)

    Returns:
        float: S = sum of C_m * W_m over kept attributes
    """
    x = np.asarray(instance, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError(f"expected a single instance, got shape {x.shape}")
    return score_normalized(model, normalize_instance(model, x))


def score_rows(model: PwlaModel, rows) -> np.ndarray:
    """Torque scores for every row of a raw matrix"""
    c = normalize_instance(model, np.atleast_2d(rows))
    kept = list(model.kept_indices)
    return c[:, kept] @ model.weights[kept]


def score_normalized(model: PwlaModel, normalized) -> float:
    """Torque score of an already normalized vector (linear in the vector)"""
    c = np.asarray(normalized, dtype=np.float64)
    if c.shape != (model.n_attributes,):
        raise ConfigError(f"expected a vector of {model.n_attributes} normalized values, got shape {c.shape}")
    kept = list(model.kept_indices)
    return float(c[kept] @ model.weights[kept])


@dataclass(frozen=True, eq=False)
class SmffnnModel:
    """
    PWLA model plus the sorted training score table

    scores are ascending (ties allowed) and labels[i] is the class of the
    training instance that produced scores[i].
    """
    pwla: PwlaModel
    scores: np.ndarray
    labels: np.ndarray
    rule: str = "nearest"
    epochs: int = 1

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if scores.ndim != 1 or scores.shape != labels.shape or scores.size == 0:
            raise ValueError("score table must be a non-empty list of (score, label) pairs")
        if np.any(np.diff(scores) < 0):
            raise ValueError("score table must be sorted ascending")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        if self.rule not in PREDICTION_RULES:
            raise ConfigError(f"unknown prediction rule '{self.rule}' (expected nearest or interval)")
        for name, array in (("scores", scores), ("labels", labels)):
            array.flags.writeable = False
            object.__setattr__(self, name, array)

    @property
    def score_table(self) -> List[Tuple[float, int]]:
        return [(float(s), int(l)) for s, l in zip(self.scores, self.labels)]

    @property
    def stack0(self) -> np.ndarray:
        return self.scores[self.labels == 0]

    @property
    def stack1(self) -> np.ndarray:
        return self.scores[self.labels == 1]

    @cached_property
    def interval_runs(self) -> Tuple[np.ndarray, np.ndarray]:
        return _runs(self)

    def with_rule(self, rule: str) -> "SmffnnModel":
        return SmffnnModel(pwla=self.pwla, scores=self.scores, labels=self.labels, rule=rule, epochs=self.epochs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pwla": self.pwla.to_dict(),
            "score_table": [[s, l] for s, l in self.score_table],
            "rule": self.rule,
            "epochs": self.epochs,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SmffnnModel":
        table = data["score_table"]
        return cls(
            pwla=PwlaModel.from_dict(data["pwla"]),
            scores=np.array([row[0] for row in table], dtype=np.float64),
            labels=np.array([row[1] for row in table], dtype=np.int64),
            rule=data.get("rule", "nearest"),
            epochs=int(data.get("epochs", 1)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def fit_thresholds(model: PwlaModel,
                   train: Dataset,
                   rule: str = "nearest",
                   on_visit: Optional[Callable[[int], None]] = None) -> SmffnnModel:
    """
    Build Stack0 / Stack1 from one pass over the training set

    Args:
        model (PwlaModel): Fitted PWLA model
        train (Dataset): Training instances with binary labels
        rule (str): Prediction rule stored on the model
        on_visit: Optional callback receiving the index of each visited instance

    Returns:
        SmffnnModel: Sorted score table
    """
    train.require_both_classes()
    if train.n_attributes != model.n_attributes:
        raise ConfigError(f"training set has {train.n_attributes} attributes, model expects {model.n_attributes}")

    scores = np.empty(train.n_instances, dtype=np.float64)
    for index, row in enumerate(train.features):
        if on_visit is not None:
            on_visit(index)
        scores[index] = score(model, row)

    # Stable sort keeps training order among equal scores
    order = np.argsort(scores, kind="stable")
    fitted = SmffnnModel(pwla=model, scores=scores[order], labels=train.labels[order], rule=rule)
    logger.info(f"SMFFNN thresholds on {train.name}: {fitted.stack0.size} in Stack0, {fitted.stack1.size} in Stack1")
    return fitted


def _majority(count0: int, count1: int) -> int:
    # Equal counts resolve to class 1
    return 0 if count0 > count1 else 1


def _predict_nearest(model: SmffnnModel, s: float) -> int:
    scores, labels = model.scores, model.labels
    i = int(np.searchsorted(scores, s, side="left"))

    candidates = []
    if i > 0:
        candidates.append(scores[i - 1])
    if i < scores.size:
        candidates.append(scores[i])
    distances = [abs(s - c) for c in candidates]
    best = min(distances)

    count0 = count1 = 0
    for value, distance in zip(candidates, distances):
        if distance != best:
            continue
        lo = int(np.searchsorted(scores, value, side="left"))
        hi = int(np.searchsorted(scores, value, side="right"))
        ones = int(labels[lo:hi].sum())
        count1 += ones
        count0 += (hi - lo) - ones
    return _majority(count0, count1)


def _runs(model: SmffnnModel) -> Tuple[np.ndarray, np.ndarray]:
    """
    Collapse the score table into same-label runs

    Returns the boundaries between consecutive runs (midpoints between the
    adjacent opposite-label scores) and the label of each run.
    """
    distinct, starts = np.unique(model.scores, return_index=True)
    ends = np.append(starts[1:], model.scores.size)
    group_labels = [_majority(int((model.labels[a:b] == 0).sum()), int(model.labels[a:b].sum()))
                    for a, b in zip(starts, ends)]

    boundaries: List[float] = []
    run_labels: List[int] = [group_labels[0]]
    for j in range(1, distinct.size):
        if group_labels[j] != run_labels[-1]:
            boundaries.append((distinct[j - 1] + distinct[j]) / 2.0)
            run_labels.append(group_labels[j])
    return np.asarray(boundaries), np.asarray(run_labels)


def _predict_interval(model: SmffnnModel, s: float) -> int:
    boundaries, run_labels = model.interval_runs
    if boundaries.size and np.any(boundaries == s):
        return 1
    return int(run_labels[int(np.searchsorted(boundaries, s))])


def predict(model: SmffnnModel, instance) -> int:
    """
    Binary-step class label for one raw instance

    The "nearest" rule returns the label of the closest training score;
    when several training entries sit at the minimal distance the label with
    more entries wins, and an even split goes to class 1. The "interval" rule
    labels by the same-label run containing the score, with run boundaries at
    midpoints between opposite-label neighbours (a score exactly on a
    boundary is class 1).

    Args:
        model (SmffnnModel): Fitted classifier
        instance: Row of raw attribute values

    Returns:
        int: 0 or 1
    """
    s = score(model.pwla, instance)
    if model.rule == "interval":
        return _predict_interval(model, s)
    return _predict_nearest(model, s)


def predict_many(model: SmffnnModel, rows) -> np.ndarray:
    """Labels for every row of a raw matrix"""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    return np.array([predict(model, row) for row in rows], dtype=np.int64)


def evaluate(model: SmffnnModel, test: Dataset) -> Tuple[float, List[int]]:
    """
    Accuracy of the classifier on a labelled set

    Args:
        model (SmffnnModel): Fitted classifier
        test (Dataset): Labelled instances

    Returns:
        Tuple[float, List[int]]: Accuracy in [0, 1] and the predicted labels
    """
    if test.n_attributes != model.pwla.n_attributes:
        raise ConfigError(f"test set has {test.n_attributes} attributes, model expects {model.pwla.n_attributes}")
    predictions = predict_many(model, test.features)
    accuracy = float(np.mean(predictions == test.labels))
    return accuracy, predictions.tolist()


def stack_table(model: SmffnnModel) -> List[Tuple[Optional[float], Optional[float]]]:
    """
    Stack0 and Stack1 side by side, each sorted descending

    Returns:
        List of (stack0 value, stack1 value) rows; the shorter stack is padded with None
    """
    stack0 = sorted(model.stack0.tolist(), reverse=True)
    stack1 = sorted(model.stack1.tolist(), reverse=True)
    depth = max(len(stack0), len(stack1))
    return [
        (stack0[i] if i < len(stack0) else None, stack1[i] if i < len(stack1) else None)
        for i in range(depth)
    ]
