"""Command-line harness: train, predict, eval, cv, bench, inspect.

Every failure path exits nonzero after printing a single line of the form
``E_<CODE>: message`` to stderr.  Timings are measured around the pure
train and predict loops, never around parsing.  All commands are
deterministic for a given seed.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .baselines import BinaryRelevance, ClassifierChain
from .cascade import predict_y
from .dataio import (
    ModelFormatError,
    ParseError,
    load_dataset,
    load_model,
    save_model,
    split_train_test,
)
from .metrics import MetricsReport, evaluate, kfold_indices, mean_report, report_csv, report_table
from .model import GAUSSIAN, LabelUniverse, ModelStore
from .oracle import BudgetError, PowersetModel

ALGOS = ("naibx", "naibx-truem", "br", "cc", "lp-oracle")
LIKELIHOODS = ("gaussian", "bernoulli", "multinomial")


class ConfigError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="naibx",
        description="Online multi-label classification with a cascade of "
                    "Naive Bayes predictors.",
    )
    parser.add_argument("--version", action="version", version=f"naibx {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *, data=False, model=False, algo=False, out=True):
        if data:
            p.add_argument("--data", required=True, help="dataset path (.arff or .csv)")
            p.add_argument("--labels", default="meka",
                           help="label spec: meka | xml:<path> | names:a,b,... | none")
        if model:
            p.add_argument("--model", required=True, help="model file path")
        if algo:
            p.add_argument("--algo", choices=ALGOS, default="naibx")
        p.add_argument("--likelihood", choices=LIKELIHOODS, default="gaussian")
        p.add_argument("--no-smoothing", action="store_true",
                       help="score with raw frequency ratios instead of add-one smoothing")
        p.add_argument("--seed", type=int, default=0)
        if out:
            p.add_argument("--out", default=None, help="write the report/predictions here")

    p_train = sub.add_parser("train", help="train a model and save it")
    add_common(p_train, data=True, model=True, algo=True, out=False)

    p_predict = sub.add_parser("predict", help="predict label sets with a saved model")
    add_common(p_predict, data=True, model=True, algo=True)

    p_eval = sub.add_parser("eval", help="train/test split evaluation")
    add_common(p_eval, data=True, algo=True)
    p_eval.add_argument("--split", type=float, default=0.66,
                        help="training fraction for the split")

    p_cv = sub.add_parser("cv", help="k-fold cross-validated evaluation")
    add_common(p_cv, data=True, algo=True)
    p_cv.add_argument("--k", type=int, default=10, help="number of folds")

    p_bench = sub.add_parser("bench", help="eval with an explicit timing summary")
    add_common(p_bench, data=True, algo=True)
    p_bench.add_argument("--split", type=float, default=0.66)

    p_inspect = sub.add_parser("inspect", help="summarize a saved model")
    p_inspect.add_argument("--model", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ParseError as exc:
        return _fail("E_PARSE", exc)
    except ModelFormatError as exc:
        return _fail("E_MODEL", exc)
    except BudgetError as exc:
        return _fail("E_BUDGET", exc)
    except ConfigError as exc:
        return _fail("E_CONFIG", exc)
    except OSError as exc:
        return _fail("E_IO", exc)
    except ValueError as exc:
        return _fail("E_CONFIG", exc)


def _fail(code: str, exc: Exception) -> int:
    message = str(exc).replace("\n", " ")
    print(f"{code}: {message}", file=sys.stderr)
    return 2


def _dispatch(args) -> int:
    command = args.command
    if command == "train":
        return _cmd_train(args)
    if command == "predict":
        return _cmd_predict(args)
    if command in ("eval", "bench"):
        return _cmd_eval(args, bench=(command == "bench"))
    if command == "cv":
        return _cmd_cv(args)
    if command == "inspect":
        return _cmd_inspect(args)
    raise ConfigError(f"unknown command {command!r}")


def _load(args):
    header, instances = load_dataset(args.data, args.labels)
    return header, instances


def _require_targets(instances, why: str) -> None:
    if any(instance.target is None for instance in instances):
        raise ConfigError(f"{why} needs target labels in the input data")


def _fit(algo: str, universe: LabelUniverse, n: int, likelihood: str, instances):
    """Train one algorithm; returns (model, train_seconds)."""
    if algo in ("br", "cc", "lp-oracle") and likelihood != GAUSSIAN:
        raise ConfigError(f"--algo {algo} supports only the gaussian likelihood")
    if algo in ("naibx", "naibx-truem"):
        model = ModelStore(universe, n, likelihood)
    elif algo == "br":
        model = BinaryRelevance(universe, n)
    elif algo == "cc":
        model = ClassifierChain(universe, n)
    elif algo == "lp-oracle":
        model = PowersetModel(universe, n)
    else:
        raise ConfigError(f"unknown algorithm {algo!r}")
    start = time.perf_counter()
    for instance in instances:
        model.add_example(instance)
    return model, time.perf_counter() - start


def _predict_sets(algo: str, model, instances, smoothing: bool):
    """Predict label sets for a test split; returns (sets, predict_seconds)."""
    preds = []
    start = time.perf_counter()
    if algo == "naibx":
        for instance in instances:
            preds.append(predict_y(model, instance.features, smoothing=smoothing).label_set)
    elif algo == "naibx-truem":
        for instance in instances:
            preds.append(
                predict_y(model, instance.features, true_m=len(instance.target),
                          smoothing=smoothing).label_set
            )
    else:
        for instance in instances:
            preds.append(model.predict(instance.features))
    return preds, time.perf_counter() - start


def _cmd_train(args) -> int:
    if args.algo not in ("naibx", "naibx-truem"):
        raise ConfigError(f"only naibx models are persisted; --algo {args.algo} "
                          f"is evaluated via eval/cv/bench")
    header, instances = _load(args)
    if not header.label_names:
        raise ConfigError("training needs a label spec that names labels")
    _require_targets(instances, "training")
    universe = LabelUniverse(header.label_names)
    model, train_seconds = _fit("naibx", universe, header.n, args.likelihood, instances)
    save_model(model, args.model)
    print(f"trained on {model.total} examples "
          f"({header.n} features, {universe.size} labels) "
          f"in {train_seconds:.3f}s -> {args.model}")
    return 0


def _cmd_predict(args) -> int:
    if args.algo not in ("naibx", "naibx-truem"):
        raise ConfigError("predict supports --algo naibx or naibx-truem")
    store = load_model(args.model)
    header, instances = _load(args)
    if header.label_names and tuple(header.label_names) != store.universe.labels:
        raise ConfigError("dataset labels do not match the model's label universe")
    if header.n != store.n:
        raise ConfigError(f"dataset has {header.n} features, model expects {store.n}")
    smoothing = not args.no_smoothing
    lines = []
    for index, instance in enumerate(instances):
        if args.algo == "naibx-truem":
            if instance.target is None:
                raise ConfigError("--algo naibx-truem needs target labels in the input data")
            trace = predict_y(store, instance.features, true_m=len(instance.target),
                              smoothing=smoothing)
        else:
            trace = predict_y(store, instance.features, smoothing=smoothing)
        steps = "|".join(f"{label}:{score:.6f}" for label, score in trace.chosen)
        labels = ",".join(label for label, _ in trace.chosen)
        lines.append(f"{index}\t{trace.predicted_size}\t{labels}\t"
                     f"{trace.joint_log_score:.6f}\t{steps}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _eval_once(args, instances, universe, n):
    train, test = split_train_test(instances, args.split, args.seed)
    if not test:
        raise ConfigError("split leaves no test instances")
    model, train_seconds = _fit(args.algo, universe, n, args.likelihood, train)
    preds, predict_seconds = _predict_sets(args.algo, model, test, not args.no_smoothing)
    report = evaluate([instance.target for instance in test], preds, universe)
    report.train_seconds = train_seconds
    report.predict_seconds = predict_seconds
    return report


def _cmd_eval(args, bench: bool) -> int:
    header, instances = _load(args)
    if not header.label_names:
        raise ConfigError("evaluation needs a label spec that names labels")
    _require_targets(instances, "evaluation")
    universe = LabelUniverse(header.label_names)
    report = _eval_once(args, instances, universe, header.n)
    rows = [(f"{header.name}/{args.algo}", report)]
    sys.stdout.write(report_table(rows))
    if bench:
        sys.stdout.write(f"T_train[s] {report.train_seconds:.3f}\n")
        sys.stdout.write(f"T_pred[s]  {report.predict_seconds:.3f}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report_csv(rows))
    return 0


def _cmd_cv(args) -> int:
    header, instances = _load(args)
    if not header.label_names:
        raise ConfigError("evaluation needs a label spec that names labels")
    _require_targets(instances, "evaluation")
    universe = LabelUniverse(header.label_names)
    folds = kfold_indices(len(instances), args.k, args.seed)
    rows = []
    for fold_number, (train_idx, test_idx) in enumerate(folds, start=1):
        train = [instances[i] for i in train_idx]
        test = [instances[i] for i in test_idx]
        model, train_seconds = _fit(args.algo, universe, header.n, args.likelihood, train)
        preds, predict_seconds = _predict_sets(args.algo, model, test,
                                               not args.no_smoothing)
        report = evaluate([instance.target for instance in test], preds, universe)
        report.train_seconds = train_seconds
        report.predict_seconds = predict_seconds
        rows.append((f"fold{fold_number:02d}", report))
    rows.append(("mean", mean_report(report for _, report in rows)))
    sys.stdout.write(report_table(rows))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report_csv(rows))
    return 0


def _cmd_inspect(args) -> int:
    store = load_model(args.model)
    out = sys.stdout
    out.write(f"model: {args.model}\n")
    out.write(f"examples: {store.total}\n")
    out.write(f"features: {store.n}\n")
    out.write(f"labels: {store.universe.size}\n")
    out.write(f"likelihood: {store.likelihood_model}\n")
    histogram = " ".join(
        f"m={m}:{int(count)}" for m, count in enumerate(store.size_counts)
    )
    out.write(f"size histogram: {histogram}\n")
    pairs = []
    labels = store.universe.labels
    for i in range(store.universe.size):
        for j in range(i + 1, store.universe.size):
            count = int(store.pair_counts[i, j])
            if count > 0:
                pairs.append((count, labels[i], labels[j]))
    pairs.sort(key=lambda item: (-item[0], item[1], item[2]))
    shown = " ".join(f"{a}+{b}:{count}" for count, a, b in pairs[:5]) or "(none)"
    out.write(f"top co-occurring pairs: {shown}\n")
    if store.likelihood_model == GAUSSIAN:
        if store.total >= 2:
            variance = store.m2_global / (store.total - 1)
        else:
            variance = store.m2_global * 0.0
        out.write(
            "feature means in "
            f"[{store.mean_global.min():.6g}, {store.mean_global.max():.6g}]\n"
        )
        out.write(
            "feature variances in "
            f"[{variance.min():.6g}, {variance.max():.6g}]\n"
        )
    else:
        out.write(
            f"token conditions: label={len(store.label_tokens.counts)} "
            f"size={len(store.size_tokens.counts)}\n"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
