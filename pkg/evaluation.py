"""
Metrics, stratified cross-validation and comparison reports

This module computes confusion counts, F-measure and accuracy, runs a
method over a FoldPlan (fit on out-of-fold rows, score on the fold) and
renders the resulting EvalReports as a text table, CSV or JSON.
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from baselines import DivergenceError
from dataset import Dataset, DatasetError, FoldPlan, make_folds
from methods import FittedMethod, MethodSpec, fit_method
from utils import ConfigError, format_epochs, format_number, format_percent, render_columns


logger = logging.getLogger(__name__)

REPORT_FORMATS = ("text", "csv", "json")
CSV_COLUMNS = ["method", "dataset", "accuracy", "f_measure", "epochs", "cpu_seconds"]

POSITIVE_CLASS = 1


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class FoldResult:
    """Metrics of one held-out fold"""
    fold: int
    train_size: int
    test_size: int
    accuracy: float
    f_measure: float
    epochs: int
    cpu_seconds: float
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass
class EvalReport:
    """
    Fold-averaged result of one method on one dataset

    Metrics are None when the method failed; error then holds the reason.
    """
    method: str
    dataset: str
    accuracy: Optional[float]
    f_measure: Optional[float]
    epochs: Optional[float]
    cpu_seconds: Optional[float]
    folds: List[FoldResult] = field(default_factory=list)
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        folds = [FoldResult(**f) for f in data.get("folds", [])]
        return cls(
            method=data["method"],
            dataset=data["dataset"],
            accuracy=data.get("accuracy"),
            f_measure=data.get("f_measure"),
            epochs=data.get("epochs"),
            cpu_seconds=data.get("cpu_seconds"),
            folds=folds,
            error=data.get("error"),
        )


def confusion(predictions: Sequence[int], truth: Sequence[int], positive: int = POSITIVE_CLASS) -> ConfusionCounts:
    """
    Confusion counts with the given positive class

    Args:
        predictions: Predicted labels
        truth: True labels
        positive (int): Label treated as positive (0 or 1)

    Returns:
        ConfusionCounts: tp, fp, tn, fn
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predictions.shape != truth.shape:
        raise ConfigError(f"{predictions.size} predictions for {truth.size} labels")
    if positive not in (0, 1):
        raise ConfigError(f"positive class must be 0 or 1, got {positive}")
    if truth.size == 0:
        return ConfusionCounts(tp=0, fp=0, tn=0, fn=0)

    tn, fp, fn, tp = confusion_matrix(truth, predictions, labels=[1 - positive, positive]).ravel()
    return ConfusionCounts(tp=int(tp), fp=int(fp), tn=int(tn), fn=int(fn))


def f_measure(c: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; any 0/0 gives 0"""
    if c.tp == 0:
        return 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    return 2.0 * precision * recall / (precision + recall)


def accuracy(c: ConfusionCounts) -> float:
    return (c.tp + c.tn) / c.total if c.total else 0.0


Fitter = Callable[[MethodSpec, Dataset], FittedMethod]


def _fit_and_score(fold: int, train: Dataset, test: Dataset, method: MethodSpec, timing: bool, fitter: Fitter) -> FoldResult:
    started = time.process_time()
    fitted = fitter(method, train)
    elapsed = time.process_time() - started if timing else 0.0

    predictions = fitted.predict_many(test.features)
    counts = confusion(predictions, test.labels)
    result = FoldResult(
        fold=fold,
        train_size=train.n_instances,
        test_size=test.n_instances,
        accuracy=accuracy(counts),
        f_measure=f_measure(counts),
        epochs=int(fitted.epochs),
        cpu_seconds=max(0.0, elapsed),
        tp=counts.tp,
        fp=counts.fp,
        tn=counts.tn,
        fn=counts.fn,
    )
    logger.info(f"{method.name} on {test.name}: accuracy {result.accuracy:.4f}, F {result.f_measure:.4f}, epochs {result.epochs}")
    return result


def _run_fold(ds: Dataset, method: MethodSpec, plan: FoldPlan, fold: int, timing: bool, fitter: Fitter) -> FoldResult:
    train = ds.subset(plan.train_indices(fold), name=f"{ds.name}[train {fold}]")
    test = ds.subset(plan.test_indices(fold), name=f"{ds.name}[fold {fold}]")
    return _fit_and_score(fold, train, test, method, timing, fitter)


def cross_validate(ds: Dataset,
                   method: MethodSpec,
                   folds: FoldPlan,
                   jobs: int = 1,
                   timing: bool = True,
                   fitter: Fitter = fit_method) -> EvalReport:
    """
    Fit on the out-of-fold rows and score on each fold in turn

    Args:
        ds (Dataset): Full dataset
        method (MethodSpec): Method to evaluate
        folds (FoldPlan): Fold assignment for ds
        jobs (int): Worker processes; 1 runs folds in this process
        timing (bool): Record process CPU time of each fit; False records 0
        fitter: Function training a method on a training set

    Returns:
        EvalReport: Mean accuracy, F-measure, epochs and total fit CPU time
    """
    if folds.assignments.size != ds.n_instances:
        raise ConfigError(f"fold plan covers {folds.assignments.size} instances, dataset has {ds.n_instances}")

    indices = range(folds.k)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, folds.k)) as pool:
            futures = [pool.submit(_run_fold, ds, method, folds, i, timing, fitter) for i in indices]
            results = [f.result() for f in futures]
    else:
        results = [_run_fold(ds, method, folds, i, timing, fitter) for i in indices]

    return EvalReport(
        method=method.name,
        dataset=ds.name,
        accuracy=float(np.mean([r.accuracy for r in results])),
        f_measure=float(np.mean([r.f_measure for r in results])),
        epochs=float(np.mean([r.epochs for r in results])),
        cpu_seconds=float(sum(r.cpu_seconds for r in results)),
        folds=results,
    )


def holdout_evaluate(train: Dataset,
                     test: Dataset,
                     method: MethodSpec,
                     timing: bool = True,
                     fitter: Fitter = fit_method) -> EvalReport:
    """
    Fit on one set and score on another (the same set gives self-evaluation)

    The report carries a single FoldResult with index 0.
    """
    if test.n_attributes != train.n_attributes:
        raise ConfigError(f"test set has {test.n_attributes} attributes, training set has {train.n_attributes}")
    result = _fit_and_score(0, train, test, method, timing, fitter)
    label = train.name if train.name == test.name else f"{train.name}->{test.name}"
    return EvalReport(
        method=method.name,
        dataset=label,
        accuracy=result.accuracy,
        f_measure=result.f_measure,
        epochs=float(result.epochs),
        cpu_seconds=result.cpu_seconds,
        folds=[result],
    )


def compare_methods(ds: Dataset,
                    methods: Sequence[MethodSpec],
                    k: int = 10,
                    seed: int = 0,
                    jobs: int = 1,
                    timing: bool = True) -> List[EvalReport]:
    """
    Cross-validate several methods under one shared FoldPlan

    A method that fails is logged and reported with its error; the other
    methods still run.

    Returns:
        List[EvalReport]: One report per method, in input order
    """
    plan = make_folds(ds, k, seed)
    reports = []
    for method in methods:
        try:
            reports.append(cross_validate(ds, method, plan, jobs=jobs, timing=timing))
        except (ConfigError, DatasetError, DivergenceError) as e:
            logger.warning(f"{method.name} failed on {ds.name}: {e}")
            reports.append(EvalReport(
                method=method.name,
                dataset=ds.name,
                accuracy=None,
                f_measure=None,
                epochs=None,
                cpu_seconds=None,
                error=str(e),
            ))
    return reports


def render_report(reports: Sequence[EvalReport], fmt: str = "text") -> str:
    """
    Render reports as a comparison table, CSV or JSON

    Rows keep the input order.

    Args:
        reports: Reports to render, at least one
        fmt (str): "text", "csv" or "json"

    Returns:
        str: Document text ending in a newline
    """
    if not reports:
        raise ConfigError("no reports to render")
    fmt = "text" if fmt == "table-text" else fmt

    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"

    if fmt == "csv":
        frame = pd.DataFrame([{c: getattr(r, c) for c in CSV_COLUMNS} for r in reports], columns=CSV_COLUMNS)
        return frame.to_csv(index=False, lineterminator="\n")

    if fmt != "text":
        raise ConfigError(f"unknown report format '{fmt}' (expected one of {', '.join(REPORT_FORMATS)})")

    headers = ["Method", "Dataset", "Accuracy", "F-measure", "Epoch", "CPU time (s)"]
    rows = []
    for r in reports:
        row = [r.method, r.dataset, format_percent(r.accuracy), format_percent(r.f_measure),
               format_epochs(r.epochs), format_number(r.cpu_seconds)]
        if r.error:
            row.append(f"failed: {r.error}")
        rows.append(row)
    if any(r.error for r in reports):
        headers.append("Note")
    return render_columns(headers, rows)


def reports_from_json(text: str) -> List[EvalReport]:
    """Parse the JSON produced by render_report(..., "json")"""
    try:
        data = json.loads(text)
        return [EvalReport.from_dict(item) for item in data]
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"invalid report JSON: {e}")
