"""
Command-line interface for the PWLA toolkit

Fits PWLA + SMFFNN and the back-propagation baselines, dumps potential
weights and threshold stacks, runs method comparisons under stratified
k-fold cross-validation and reproduces the four published experiments.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

import pwla
import smffnn
from baselines import BpnConfig, DivergenceError, InitScheme
from dataset import Dataset, DatasetError, canonical_format, concat_datasets, load_dataset, make_folds
from evaluation import (
    REPORT_FORMATS,
    EvalReport,
    accuracy,
    compare_methods,
    confusion,
    f_measure,
    holdout_evaluate,
    render_report,
)
from methods import MethodSpec, fit_method, load_fitted, parse_method, parse_methods
from pwla import ReductionPolicy
from reference_tables import compare_weights, reference_weights
from scenarios import SCENARIOS, ScenarioSettings, render_scenario, run_scenarios
from utils import ConfigError, atomic_write_text, render_columns, setup_logging


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DATA_COMMANDS = ("fit", "predict", "dump-weights", "dump-stacks", "bench", "folds")
FOLD_COMMANDS = ("bench", "folds", "reproduce")


@dataclass(frozen=True)
class RunConfig:
    """
    Validated settings of one command-line run

    methods holds the parsed method list for fit (one entry) and bench;
    scenarios is only used by reproduce.
    """
    command: str
    dataset: Optional[str] = None
    format: Optional[str] = None
    label_column: Optional[int] = None
    test_dataset: Optional[str] = None
    combine_test: bool = False
    methods: Tuple[MethodSpec, ...] = ()
    policy: ReductionPolicy = field(default_factory=ReductionPolicy)
    rule: str = "nearest"
    axis: str = "row"
    bpn: BpnConfig = field(default_factory=BpnConfig)
    seed: int = 0
    k: int = 10
    jobs: int = 1
    timing: bool = True
    out: Optional[str] = None
    out_format: str = "text"
    model: Optional[str] = None
    compare: Optional[str] = None
    data_dir: Optional[str] = None
    scenarios: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.command in DATA_COMMANDS and not self.dataset:
            raise ConfigError(f"{self.command} needs --dataset")
        if self.command in ("fit", "bench") and not self.methods:
            raise ConfigError(f"{self.command} needs at least one method")
        if self.command == "predict" and not self.model:
            raise ConfigError("predict needs --model")
        if self.command in FOLD_COMMANDS and self.k < 2:
            raise ConfigError(f"--k must be at least 2, got {self.k}")
        if self.jobs < 1:
            raise ConfigError(f"--jobs must be at least 1, got {self.jobs}")
        if self.combine_test and not self.test_dataset:
            raise ConfigError("--combine-test needs --test-dataset")
        if self.out_format not in REPORT_FORMATS:
            raise ConfigError(f"unknown output format '{self.out_format}'")
        unknown = [n for n in self.scenarios if n not in SCENARIOS]
        if unknown:
            raise ConfigError(f"unknown scenario(s) {', '.join(unknown)} (expected {', '.join(SCENARIOS)})")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """Build and validate a RunConfig from parsed command-line arguments"""
        def get(name, default=None):
            return getattr(args, name, default)

        policy = ReductionPolicy.parse(get("reduce", "keep-all"))
        rule = get("prediction_rule", "nearest")
        axis = get("axis", "row")
        bpn = bpn_config(args)
        settings = {"policy": policy, "rule": rule, "axis": axis, "pca_dims": get("pca_dims"), "bpn": bpn}

        methods: Tuple[MethodSpec, ...] = ()
        if args.command == "fit":
            methods = (parse_method(args.method, **settings),)
        elif args.command == "bench":
            methods = tuple(parse_methods(args.methods, **settings))

        scenarios = tuple(n.strip() for n in get("scenarios", "").split(",") if n.strip())
        return cls(
            command=args.command,
            dataset=get("dataset"),
            format=get("format"),
            label_column=get("label_column"),
            test_dataset=get("test_dataset"),
            combine_test=get("combine_test", False),
            methods=methods,
            policy=policy,
            rule=rule,
            axis=axis,
            bpn=bpn,
            seed=args.seed,
            k=get("k", 10),
            jobs=get("jobs", 1),
            timing=not get("no_timing", False),
            out=args.out,
            out_format=args.out_format,
            model=get("model"),
            compare=get("compare"),
            data_dir=get("data_dir"),
            scenarios=scenarios,
        )


def infer_format(dataset: str) -> str:
    """
    Guess the file format from the dataset argument

    Args:
        dataset (str): "xor" or a file path

    Returns:
        str: Format tag; generic-csv when nothing more specific applies
    """
    name = Path(dataset).name.lower()
    if dataset.lower() == "xor":
        return "xor-builtin"
    if name.startswith("spectf"):
        return "spectf"
    if name.startswith("spect"):
        return "spect"
    if "bupa" in name or name.startswith("bpdata"):
        return "bupa"
    return "generic-csv"


def _load(path: str, cfg: RunConfig) -> Dataset:
    fmt = canonical_format(cfg.format) if cfg.format else infer_format(path)
    return load_dataset(path, fmt, label_column=cfg.label_column)


def load_inputs(cfg: RunConfig) -> Dataset:
    """The --dataset file, extended with --test-dataset rows when --combine-test is set"""
    ds = _load(cfg.dataset, cfg)
    if cfg.combine_test:
        ds = concat_datasets(ds, _load(cfg.test_dataset, cfg))
    return ds


def bpn_config(args: argparse.Namespace) -> BpnConfig:
    """BpnConfig from --bpn-config (if given) with command-line flags on top"""
    cfg = BpnConfig()
    path = getattr(args, "bpn_config", None)
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        cfg = BpnConfig.from_dict(data)
    init = getattr(args, "init", None)
    return cfg.replace(
        hidden_units=getattr(args, "hidden", None),
        learning_rate=getattr(args, "lr", None),
        max_epochs=getattr(args, "max_epochs", None),
        target_mse=getattr(args, "target_mse", None),
        init=InitScheme.parse(init) if init else None,
        seed=args.seed,
    )


def emit(text: str, out: Optional[str]) -> None:
    """Write to --out atomically, or to stdout"""
    if out:
        atomic_write_text(out, text)
        logger.info(f"Wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_fit(cfg: RunConfig) -> int:
    ds = load_inputs(cfg)
    spec = cfg.methods[0]
    fitted = fit_method(spec, ds)

    counts = confusion(fitted.predict_many(ds.features), ds.labels)
    summary = (f"{spec.name}: n={ds.n_instances} m={ds.n_attributes} kept={fitted.kept_count} "
               f"epochs={fitted.epochs} train_accuracy={accuracy(counts):.4f}")

    document = json.dumps(fitted.to_dict(), indent=2) + "\n"
    if cfg.out:
        emit(document, cfg.out)
        print(summary)
    else:
        sys.stdout.write(document)
        print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_predict(cfg: RunConfig) -> int:
    try:
        data = json.loads(Path(cfg.model).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{cfg.model}: invalid model JSON ({e})")
    fitted = load_fitted(data)
    ds = load_inputs(cfg)

    predictions = fitted.predict_many(ds.features)
    counts = confusion(predictions, ds.labels)
    logger.info(f"{fitted.spec.name} on {ds.name}: accuracy {accuracy(counts):.4f}, F {f_measure(counts):.4f}")

    if cfg.out_format == "json":
        document = json.dumps({
            "method": fitted.spec.name,
            "dataset": ds.name,
            "predictions": predictions.tolist(),
            "accuracy": accuracy(counts),
            "f_measure": f_measure(counts),
        }, indent=2) + "\n"
    elif cfg.out_format == "csv":
        rows = [f"{i},{p},{t}" for i, (p, t) in enumerate(zip(predictions, ds.labels))]
        document = "\n".join(["index,predicted,label", *rows]) + "\n"
    else:
        document = "\n".join(str(p) for p in predictions) + "\n"
    emit(document, cfg.out)
    return EXIT_OK


def cmd_dump_weights(cfg: RunConfig) -> int:
    ds = load_inputs(cfg)
    model = pwla.fit(ds, policy=cfg.policy, axis=cfg.axis)
    kept = set(model.kept_indices)

    if cfg.out_format == "json":
        document = model.to_json() + "\n"
    elif cfg.out_format == "csv":
        rows = [f"{i + 1},{name},{float(w)!r},{int(i in kept)}"
                for i, (name, w) in enumerate(zip(ds.attribute_names, model.weights))]
        document = "\n".join(["attribute,name,weight,kept", *rows]) + "\n"
    else:
        rows = [[str(i + 1), name, f"{w:.3f}", "yes" if i in kept else "no"]
                for i, (name, w) in enumerate(zip(ds.attribute_names, model.weights))]
        document = render_columns(["Attribute", "Name", "Weight", "Kept"], rows)

    if cfg.compare:
        key = infer_format(cfg.dataset).replace("-builtin", "") if cfg.compare == "auto" else cfg.compare
        comparison = compare_weights(model.weights, reference_weights(key), dataset=key)
        document += "\n" + comparison.render()
    emit(document, cfg.out)
    return EXIT_OK


def cmd_dump_stacks(cfg: RunConfig) -> int:
    ds = load_inputs(cfg)
    model = pwla.fit(ds, policy=cfg.policy, axis=cfg.axis)
    fitted = smffnn.fit_thresholds(model, ds, rule=cfg.rule)
    table = smffnn.stack_table(fitted)

    def cell(value):
        return "" if value is None else f"{value:.6g}"

    if cfg.out_format == "json":
        document = json.dumps({
            "stack0": sorted(fitted.stack0.tolist(), reverse=True),
            "stack1": sorted(fitted.stack1.tolist(), reverse=True),
        }, indent=2) + "\n"
    elif cfg.out_format == "csv":
        def exact(value):
            return "" if value is None else repr(value)

        document = "\n".join(["stack0,stack1", *(f"{exact(a)},{exact(b)}" for a, b in table)]) + "\n"
    else:
        document = render_columns(["Stack0", "Stack1"], [[cell(a), cell(b)] for a, b in table])
    emit(document, cfg.out)
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    ds = load_inputs(cfg)

    if cfg.test_dataset and not cfg.combine_test:
        test = _load(cfg.test_dataset, cfg)
        reports = [_holdout_or_failure(ds, test, m, cfg.timing) for m in cfg.methods]
    else:
        reports = compare_methods(ds, cfg.methods, k=cfg.k, seed=cfg.seed, jobs=cfg.jobs, timing=cfg.timing)

    emit(render_report(reports, cfg.out_format), cfg.out)
    return EXIT_OK


def _holdout_or_failure(train: Dataset, test: Dataset, method: MethodSpec, timing: bool) -> EvalReport:
    try:
        return holdout_evaluate(train, test, method, timing=timing)
    except (ConfigError, DatasetError, DivergenceError) as e:
        logger.warning(f"{method.name} failed on {train.name}: {e}")
        return EvalReport(method=method.name, dataset=train.name, accuracy=None, f_measure=None,
                          epochs=None, cpu_seconds=None, error=str(e))


def cmd_folds(cfg: RunConfig) -> int:
    ds = load_inputs(cfg)
    plan = make_folds(ds, cfg.k, cfg.seed)

    if cfg.out_format == "json":
        document = json.dumps({"k": plan.k, "assignments": plan.assignments.tolist()}, indent=2) + "\n"
    elif cfg.out_format == "csv":
        document = "\n".join(["index,fold", *(f"{i},{f}" for i, f in enumerate(plan.assignments))]) + "\n"
    else:
        rows = []
        for fold in range(plan.k):
            labels = ds.labels[plan.test_indices(fold)]
            rows.append([str(fold), str(labels.size), str(int(np.sum(labels == 0))), str(int(np.sum(labels == 1)))])
        document = render_columns(["Fold", "Size", "Class 0", "Class 1"], rows)
    emit(document, cfg.out)
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig) -> int:
    settings = ScenarioSettings(k=cfg.k, seed=cfg.seed, jobs=cfg.jobs, timing=cfg.timing, rule=cfg.rule, bpn=cfg.bpn)
    names = cfg.scenarios or tuple(SCENARIOS)
    data_dir = Path(cfg.data_dir) if cfg.data_dir else None
    results = run_scenarios(names, data_dir=data_dir, settings=settings)

    if cfg.out_format == "json":
        document = json.dumps([
            {
                "name": r.name,
                "skipped": r.skipped,
                "weights": [{"label": c.dataset, "max_abs_delta": c.max_abs_delta, "matches": c.matches}
                            for c in r.weight_comparisons],
                "reports": [rep.to_dict() for rep in r.reports],
            }
            for r in results
        ], indent=2) + "\n"
    else:
        document = "\n".join(render_scenario(r, cfg.out_format) for r in results)
    emit(document, cfg.out)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "dump-weights": cmd_dump_weights,
    "dump-stacks": cmd_dump_stacks,
    "bench": cmd_bench,
    "folds": cmd_folds,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    """
    Argument parser with one subcommand per COMMANDS entry
    """
    parser = argparse.ArgumentParser(
        prog="pwla",
        description="PWLA preprocessing, one-epoch SMFFNN and back-propagation baselines",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py fit --dataset xor --method pwla-smffnn --out xor.json
  python main.py dump-weights --dataset data/SPECT.train --compare
  python main.py fit --dataset data/SPECTF.train --method pwla-smffnn --reduce top-k:14
  python main.py bench --dataset xor --methods pwla-smffnn,sbpn --k 4 --seed 1
  python main.py reproduce --data-dir data --no-timing --out-format csv
        """
    )
    parser.add_argument("--verbose", action="store_true", help="Log progress to stderr")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Seed for folds and BPN initialization")
    common.add_argument("--out", help="Output file (written atomically); stdout when omitted")
    common.add_argument("--out-format", choices=REPORT_FORMATS, default="text")
    common.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="Log progress to stderr")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--dataset", required=True, help="Data file path, or 'xor' for the builtin table")
    data.add_argument("--format", help="xor-builtin, spect, spectf, bupa or generic-csv (guessed from the file name)")
    data.add_argument("--label-column", type=int, help="Label position for generic-csv (default: last)")
    data.add_argument("--test-dataset", help="Separate test file with the same format")
    data.add_argument("--combine-test", action="store_true", help="Append --test-dataset rows before fitting")

    pwla_args = argparse.ArgumentParser(add_help=False)
    pwla_args.add_argument("--reduce", default="keep-all", help="keep-all, above-mean or top-k:K")
    pwla_args.add_argument("--axis", choices=pwla.AXES, default="row", help="Standardization axis")
    pwla_args.add_argument("--prediction-rule", choices=smffnn.PREDICTION_RULES, default="nearest")

    bpn_args = argparse.ArgumentParser(add_help=False)
    bpn_args.add_argument("--pca-dims", type=int, help="PCA dimensions for pca-bpn (default 10)")
    bpn_args.add_argument("--hidden", type=int, help="Hidden units (default 10)")
    bpn_args.add_argument("--lr", type=float, help="Learning rate (default 0.5)")
    bpn_args.add_argument("--max-epochs", type=int, help="Epoch cap (default 10000)")
    bpn_args.add_argument("--target-mse", type=float, help="Stopping MSE (default 1e-4)")
    bpn_args.add_argument("--init", help="uniform:LO,HI or scawi")
    bpn_args.add_argument("--bpn-config", help="JSON file with BPN settings; flags override it")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--k", type=int, default=10, help="Number of folds")
    runs.add_argument("--jobs", type=int, default=1, help="Worker processes for folds")
    runs.add_argument("--no-timing", action="store_true",
                      help="Report zero CPU time; measured times differ between runs")

    sub = parser.add_subparsers(dest="command", required=True)
    fit = sub.add_parser("fit", parents=[common, data, pwla_args, bpn_args], help="Fit a method and save the model")
    fit.add_argument("--method", default="pwla-smffnn")

    predict = sub.add_parser("predict", parents=[common, data], help="Label a dataset with a saved model")
    predict.add_argument("--model", required=True, help="Model JSON written by fit")

    dump_weights = sub.add_parser("dump-weights", parents=[common, data, pwla_args], help="Print potential weights")
    dump_weights.add_argument("--compare", nargs="?", const="auto",
                              help="Compare with a published table (xor, spect, spectf, bupa)")

    sub.add_parser("dump-stacks", parents=[common, data, pwla_args], help="Print Stack0 / Stack1 thresholds")

    bench = sub.add_parser(
        "bench", parents=[common, data, pwla_args, bpn_args, runs],
        help="Compare methods (byte-identical output across runs needs --no-timing)",
        description="Cross-validate methods on one fold plan. Results are seeded; the CPU time column is "
                    "measured unless --no-timing is given, so only --no-timing runs repeat byte for byte.",
    )
    bench.add_argument("--methods", default="pwla-smffnn,sbpn", help="Comma-separated method tags")

    sub.add_parser("folds", parents=[common, data, runs], help="Show the stratified fold plan")

    reproduce = sub.add_parser("reproduce", parents=[common, bpn_args, runs], help="Run the published experiments")
    reproduce.add_argument("--data-dir", help="Directory with the UCI files (default: $PWLA_DATA_DIR)")
    reproduce.add_argument("--scenarios", default=",".join(SCENARIOS), help="Comma-separated scenario names")
    reproduce.add_argument("--prediction-rule", choices=smffnn.PREDICTION_RULES, default="nearest")

    return parser


def exit_code(error: Exception) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, DivergenceError):
        return EXIT_NUMERIC
    return EXIT_IO


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one command and return its exit code

    0 success, 1 input/output failure, 2 configuration error, 3 BPN divergence.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (DatasetError, OSError, ConfigError, DivergenceError) as e:
        if args.verbose:
            logger.exception(f"{args.command} failed")
        print(f"error: {e}", file=sys.stderr)
        return exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
