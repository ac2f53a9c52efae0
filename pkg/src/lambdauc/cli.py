"""Command line: train, predict, evaluate, grid, synth.

Exit status is 0 on success, 2 for usage or data errors, 1 otherwise.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

import numpy as np

from . import metrics, model_io
from .atomic import atomic_write
from .boosting import LEARNING_RATE_GRID, TrainConfig, predict, train
from .data import DataError, Dataset, list_folds, load_dataset, load_fold
from .lambdas import DEFAULT_PAIR_BUDGET
from .synth import YAHOO_LIKE_SKEW, SynthConfig, write_folds

logger = logging.getLogger("lambdauc")

DEFAULT_EVAL_METRICS = "auc,mauc,classauc,map,micro,macro,ndcg"
DEFAULT_CUTOFFS = ",".join(str(k) for k in range(1, 11))


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_data_args(p: argparse.ArgumentParser):
    p.add_argument("--data", help="training file (with --valid) or data file")
    p.add_argument("--valid", help="validation file used with --data")
    p.add_argument("--folds", help="root directory holding Fold<k>/{train,vali,test}.txt")
    p.add_argument("--fold", type=int, default=1, help="fold number under --folds (default 1)")


def _add_train_args(p: argparse.ArgumentParser):
    p.add_argument("--metric", default="auc", help="auc | mauc | ndcg@k")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--leaves", type=int, default=7)
    p.add_argument("--min-docs", type=int, default=10, help="minimum documents per leaf")
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--pair-budget", type=int, default=DEFAULT_PAIR_BUDGET)
    p.add_argument("--orientation", choices=("metric", "label"), default="metric",
                   help="which document of a pair the lambda pushes up")
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lambdauc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--out", help="history CSV (default: <model>.history.csv)")

    p = sub.add_parser("grid", help="pick the learning rate on the validation split")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--grid", type=_floats, default=list(LEARNING_RATE_GRID))
    p.add_argument("--model", required=True, help="where to write the winning model")
    p.add_argument("--out", required=True, help="directory for per-rate histories and summary.tsv")

    p = sub.add_parser("predict", help="score documents with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="predictions TSV: query_id, ordinal, score")

    p = sub.add_parser("evaluate", help="evaluate a model or a predictions file")
    p.add_argument("--model", help="model file; may contain {fold}")
    p.add_argument("--predictions", help="predictions TSV; may contain {fold}")
    p.add_argument("--data", help="test file")
    p.add_argument("--folds", help="fold root; evaluates every Fold<k>/test.txt")
    p.add_argument("--eval-metrics", default=DEFAULT_EVAL_METRICS,
                   help="comma list of auc, mauc, classauc, map, micro[@k], macro[@k], ndcg[@k]")
    p.add_argument("--k", type=_ints, default=_ints(DEFAULT_CUTOFFS), help="cutoffs for bare micro/macro/ndcg")
    p.add_argument("--out", help="TSV report (metric, query_id, value)")

    p = sub.add_parser("synth", help="write a synthetic fold-structured dataset")
    p.add_argument("--out", required=True, help="root directory")
    p.add_argument("--queries", type=int, default=5, help="queries per split")
    p.add_argument("--docs-per-query", type=int, default=40)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--skew", default=None, help="comma class shares, or 'yahoo' for the 5-grade skew")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--features", type=int, default=10)
    p.add_argument("--informative", type=int, default=3)
    p.add_argument("--num-folds", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    return parser


def _config(args) -> TrainConfig:
    return TrainConfig(
        metric=args.metric, learning_rate=args.learning_rate,
        num_trees=args.trees, max_leaves=args.leaves, min_docs_per_leaf=args.min_docs,
        patience=args.patience, seed=args.seed, pair_budget=args.pair_budget,
        orientation=args.orientation,
    )


def _training_data(args) -> tuple[Dataset, Dataset | None]:
    if args.folds:
        train_set, valid_set, _ = load_fold(args.folds, args.fold)
        return train_set, valid_set
    if not args.data:
        raise UsageError("give --data or --folds")
    if not os.path.isfile(args.data):
        raise DataError(f"train split missing: {args.data}")
    train_set = load_dataset(args.data)
    valid_set = None
    if args.valid:
        if not os.path.isfile(args.valid):
            raise DataError(f"validation split missing: {args.valid}")
        valid_set = load_dataset(args.valid)
    return train_set, valid_set


def _write_text(path: str, text: str):
    with atomic_write(path) as fh:
        fh.write(text)


def cmd_train(args) -> int:
    config = _config(args)
    train_set, valid_set = _training_data(args)
    ensemble, history = train(train_set, valid_set, config)
    model_io.save(ensemble, args.model)
    _write_text(args.out or args.model + ".history.csv", history.to_csv())
    print(f"trained {len(ensemble)} trees (best iteration {history.best_iteration}); "
          f"final train {config.metric} = {_fmt(history.train[history.best_iteration])}")
    return 0


def grid_search(train_set, valid_set, base: TrainConfig, rates: Sequence[float]):
    """Train once per rate; the best final validation value wins, lowest rate on ties.

    Returns ``(winner_rate, {rate: (ensemble, history, score)})``.
    """
    if valid_set is None:
        raise UsageError("grid search needs a validation split")
    results = {}
    for rate in sorted(set(rates)):
        config = TrainConfig(**{**base.__dict__, "learning_rate": rate})
        ensemble, history = train(train_set, valid_set, config)
        score = history.valid[history.best_iteration]
        results[rate] = (ensemble, history, score)
    winner = None
    for rate in sorted(results):
        score = results[rate][2]
        if score is None:
            continue
        if winner is None or score > results[winner][2]:
            winner = rate
    if winner is None:
        raise DataError("validation metric undefined for every rate")
    return winner, results


def cmd_grid(args) -> int:
    base = _config(args)
    for rate in args.grid:
        if not 0.0 < rate <= 1.0:
            raise UsageError(f"learning rate {rate} outside (0, 1]")
    train_set, valid_set = _training_data(args)
    winner, results = grid_search(train_set, valid_set, base, args.grid)
    os.makedirs(args.out, exist_ok=True)
    lines = ["learning_rate\tbest_iteration\tvalid_metric\tselected"]
    for rate, (_, history, score) in sorted(results.items()):
        _write_text(os.path.join(args.out, f"history_lr{rate!r}.csv"), history.to_csv())
        lines.append(f"{rate!r}\t{history.best_iteration}\t{_fmt_exact(score)}\t{int(rate == winner)}")
    _write_text(os.path.join(args.out, "summary.tsv"), "\n".join(lines) + "\n")
    model_io.save(results[winner][0], args.model)
    print("\n".join(lines))
    print(f"selected learning rate {winner!r}")
    return 0


def cmd_predict(args) -> int:
    ensemble = model_io.load(args.model)
    dataset = load_dataset(args.data)
    scores = predict(ensemble, dataset.features)
    _write_text(args.out, format_predictions(dataset, scores))
    return 0


def format_predictions(dataset: Dataset, scores) -> str:
    lines = []
    for q, rows in enumerate(dataset.query_slices()):
        for ordinal, row in enumerate(range(rows.start, rows.stop)):
            lines.append(f"{dataset.query_ids[q]}\t{ordinal}\t{float(scores[row])!r}")
    return "\n".join(lines) + "\n"


def read_predictions(path: str, dataset: Dataset) -> np.ndarray:
    """Scores aligned with ``dataset`` from a predictions TSV."""
    lookup = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{n}: expected query_id, ordinal, score")
            try:
                lookup[(parts[0], int(parts[1]))] = float(parts[2])
            except ValueError:
                raise DataError(f"{path}:{n}: malformed prediction") from None
    scores = np.empty(dataset.num_documents)
    for q, rows in enumerate(dataset.query_slices()):
        for ordinal, row in enumerate(range(rows.start, rows.stop)):
            key = (dataset.query_ids[q], ordinal)
            if key not in lookup:
                raise DataError(f"no prediction for query {key[0]} document {ordinal}")
            scores[row] = lookup[key]
    return scores


def expand_metrics(names: str, cutoffs: Sequence[int]) -> list[str]:
    out = []
    for name in (n.strip().lower() for n in names.split(",")):
        if not name:
            continue
        if name in ("micro", "macro", "ndcg"):
            out.extend(f"{name}@{k}" for k in cutoffs)
        else:
            out.append(name)
    return out


def evaluate_split(dataset: Dataset, scores, names: Sequence[str]) -> list[metrics.MetricReport]:
    runs = metrics.dataset_runs(dataset, scores)
    reports = []
    for name in names:
        reports.extend(metrics.evaluate(name, runs, dataset.class_counts))
    return reports


def cmd_evaluate(args) -> int:
    if bool(args.model) == bool(args.predictions):
        raise UsageError("give exactly one of --model or --predictions")
    if bool(args.data) == bool(args.folds):
        raise UsageError("give exactly one of --data or --folds")
    names = expand_metrics(args.eval_metrics, args.k)

    if args.folds:
        folds = list_folds(args.folds)
        if not folds:
            raise DataError(f"no Fold<k> directories under {args.folds}")
        splits = [(f"Fold{k}", os.path.join(args.folds, f"Fold{k}", "test.txt"), k) for k in folds]
    else:
        splits = [("test", args.data, None)]

    rows, tsv = [], []
    for label, path, fold in splits:
        if not os.path.isfile(path):
            raise DataError(f"test split missing: {path}")
        dataset = load_dataset(path)
        if args.model:
            ensemble = model_io.load(args.model.format(fold=fold))
            scores = predict(ensemble, dataset.features)
        else:
            scores = read_predictions(args.predictions.format(fold=fold), dataset)
        reports = evaluate_split(dataset, scores, names)
        rows.append((label, {r.name: r.aggregate for r in reports}))
        text = metrics.format_tsv(reports)
        if fold is not None:
            text = "".join(f"{label}\t{line}\n" for line in text.splitlines())
        tsv.append(text)

    if len(rows) > 1:
        columns = {c for _, values in rows for c in values}
        mean = {}
        for col in columns:
            vals = [values[col] for _, values in rows if values.get(col) is not None]
            mean[col] = float(np.mean(vals)) if vals else None
        rows.append(("mean", {c: mean[c] for c in rows[0][1]}))
        if args.out:
            tsv.append("".join(f"mean\t{c}\taggregate\t{'skipped' if v is None else repr(v)}\n"
                               for c, v in rows[-1][1].items()))
    sys.stdout.write(metrics.format_table(rows))
    if args.out:
        _write_text(args.out, "".join(tsv))
    return 0


def parse_skew(text: str | None, classes: int):
    if text is None:
        return None
    if text.lower() == "yahoo":
        if classes != len(YAHOO_LIKE_SKEW):
            raise UsageError("--skew yahoo needs --classes 5")
        return YAHOO_LIKE_SKEW
    return tuple(_floats(text))


def cmd_synth(args) -> int:
    config = SynthConfig(
        queries=args.queries, docs_per_query=args.docs_per_query, classes=args.classes,
        skew=parse_skew(args.skew, args.classes), noise=args.noise, features=args.features,
        informative=args.informative, seed=args.seed,
    )
    for path in write_folds(args.out, config, args.num_folds):
        print(path)
    return 0


def _fmt(value) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def _fmt_exact(value) -> str:
    return "undefined" if value is None else repr(value)


COMMANDS = {
    "train": cmd_train, "grid": cmd_grid, "predict": cmd_predict,
    "evaluate": cmd_evaluate, "synth": cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DataError, model_io.ModelFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    finally:
        logger.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
