"""LambdaMART-style boosting of regression trees on AUC / MAUC / NDCG lambdas."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .data import Dataset
from .lambdas import DEFAULT_PAIR_BUDGET, accumulate_dataset, make_metric
from .tree import Binning, Tree, fit_tree

logger = logging.getLogger(__name__)

LEARNING_RATE_GRID = (0.1, 0.25, 0.5, 0.9)

MAUC_BINARY_WARNING = "MAUC λ vanishes on balanced binary data; consider --metric auc"


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    metric: str = "auc"
    learning_rate: float = 0.1
    num_trees: int = 100
    max_leaves: int = 7
    min_docs_per_leaf: int = 10
    patience: int = 50
    seed: int = 42
    pair_budget: int = DEFAULT_PAIR_BUDGET
    orientation: str = "metric"

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning rate must lie in (0, 1]")
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.min_docs_per_leaf < 1:
            raise ValueError("min_docs_per_leaf must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.pair_budget < 1:
            raise ValueError("pair_budget must be >= 1")
        if self.orientation not in ("metric", "label"):
            raise ValueError("orientation must be 'metric' or 'label'")
        make_metric(self.metric, {})  # validates the name


@dataclass
class Ensemble:
    trees: list[Tree] = field(default_factory=list)
    shrinkage: float = 0.1
    num_features: int = 0
    metric: str = "auc"

    def __len__(self) -> int:
        return len(self.trees)

    def truncated(self, num_trees: int) -> "Ensemble":
        return Ensemble(self.trees[:num_trees], self.shrinkage, self.num_features, self.metric)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Ensemble):
            return NotImplemented
        return (self.shrinkage == other.shrinkage and self.num_features == other.num_features
                and self.metric == other.metric and len(self.trees) == len(other.trees)
                and all(a == b for a, b in zip(self.trees, other.trees)))


def _as_matrix(X, num_features: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] > num_features:
        raise ValueError(f"documents have {X.shape[1]} features, model expects {num_features}")
    if X.shape[1] < num_features:
        X = np.hstack([X, np.zeros((X.shape[0], num_features - X.shape[1]))])
    return X


def predict(ensemble: Ensemble, X) -> np.ndarray:
    """Sum of ``shrinkage * tree(x)`` over the trees, in order."""
    X = _as_matrix(X, ensemble.num_features)
    scores = np.zeros(len(X))
    for tree in ensemble.trees:
        scores += ensemble.shrinkage * tree.predict(X)
    return scores


def evaluate_metric(name: str, dataset: Dataset, scores) -> float | None:
    """Dataset-level value of a training metric, used for model selection."""
    runs = metrics.dataset_runs(dataset, scores)
    name = name.lower()
    if name == "auc":
        report = metrics.auc(runs)
    elif name == "mauc":
        report = metrics.mauc(runs, dataset.class_proportions)
    elif name.startswith("ndcg@"):
        report = metrics.ndcg_at_k(runs, int(name[5:]))
    else:
        raise ValueError(f"unknown metric {name!r}")
    return report.aggregate


@dataclass
class History:
    iterations: list[int] = field(default_factory=list)
    train: list[float | None] = field(default_factory=list)
    valid: list[float | None] | None = None
    best_iteration: int = 0

    def to_csv(self) -> str:
        def fmt(v):
            return "" if v is None else repr(v)

        lines = ["iteration,train_metric,valid_metric"]
        for k, it in enumerate(self.iterations):
            valid = fmt(self.valid[k]) if self.valid is not None else ""
            lines.append(f"{it},{fmt(self.train[k])},{valid}")
        return "\n".join(lines) + "\n"


def train(train_set: Dataset, valid_set: Dataset | None, config: TrainConfig) -> tuple[Ensemble, History]:
    """Boost ``config.num_trees`` trees on the lambda gradients of ``config.metric``.

    Iteration 0 is the empty model. With a validation set the returned
    ensemble is cut at the best validation iteration (earliest on ties) and
    training stops after ``config.patience`` rounds without improvement.
    """
    metric = make_metric(config.metric, train_set.class_proportions)
    if metric.kind == "mauc" and train_set.num_classes == 2:
        logger.warning(MAUC_BINARY_WARNING)
    if valid_set is not None and valid_set.num_features != train_set.num_features:
        width = max(valid_set.num_features, train_set.num_features)
        train_set, valid_set = train_set.with_num_features(width), valid_set.with_num_features(width)

    rng = np.random.default_rng(config.seed)
    binning = Binning.fit(train_set.features)
    ensemble = Ensemble([], config.learning_rate, train_set.num_features, metric.kind)
    train_scores = np.zeros(train_set.num_documents)
    valid_scores = np.zeros(valid_set.num_documents) if valid_set is not None else None

    history = History(valid=[] if valid_set is not None else None)

    def record(iteration: int):
        history.iterations.append(iteration)
        history.train.append(evaluate_metric(metric.kind, train_set, train_scores))
        if valid_set is not None:
            history.valid.append(evaluate_metric(metric.kind, valid_set, valid_scores))

    record(0)
    best_value = history.valid[0] if valid_set is not None else None
    since_best = 0
    for iteration in range(1, config.num_trees + 1):
        buffer, defined = accumulate_dataset(train_set, train_scores, metric,
                                             pair_budget=config.pair_budget, rng=rng,
                                             orientation=config.orientation)
        if defined == 0:
            raise TrainingError(f"metric {metric.kind} is undefined on every training query")
        tree = fit_tree(None, buffer.lambdas, buffer.weights, max_leaves=config.max_leaves,
                        min_docs_per_leaf=config.min_docs_per_leaf, binning=binning)
        ensemble.trees.append(tree)
        train_scores += ensemble.shrinkage * tree.predict(train_set.features)
        if valid_set is not None:
            valid_scores += ensemble.shrinkage * tree.predict(valid_set.features)
        record(iteration)
        logger.debug("iteration %d train=%s valid=%s", iteration, history.train[-1],
                     history.valid[-1] if valid_set is not None else None)

        if valid_set is not None:
            value = history.valid[-1]
            if value is not None and (best_value is None or value > best_value):
                best_value = value
                history.best_iteration = iteration
                since_best = 0
            else:
                since_best += 1
                if since_best >= config.patience:
                    logger.info("early stop at iteration %d", iteration)
                    break

    if valid_set is None:
        history.best_iteration = len(ensemble)
        return ensemble, history
    return ensemble.truncated(history.best_iteration), history
