"""Gradient-boosted trees trained with AUC and multi-class AUC lambda gradients."""

from .boosting import Ensemble, History, TrainConfig, predict, train
from .data import Dataset, Document, Query, load_dataset, load_fold, parse_line
from .lambdas import (
    LambdaBuffer,
    RankedList,
    accumulate_lambdas,
    delta_auc,
    delta_mauc,
    delta_ndcg,
    rank,
    ranknet_rho,
)
from .tree import Tree, fit_tree

__all__ = [
    "Dataset", "Document", "Ensemble", "History", "LambdaBuffer", "Query", "RankedList",
    "TrainConfig", "Tree", "accumulate_lambdas", "delta_auc", "delta_mauc", "delta_ndcg",
    "fit_tree", "load_dataset", "load_fold", "parse_line", "predict", "rank", "ranknet_rho",
    "train",
]

__version__ = "0.1.0"
