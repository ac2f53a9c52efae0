"""Seeded synthetic ranking data with class-shifted feature distributions."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, dump_dataset

# all-document shares for grades 0..4: 48% grade 1, 2.5% grade 4
YAHOO_LIKE_SKEW = (0.25, 0.48, 0.17, 0.075, 0.025)


@dataclass(frozen=True)
class SynthConfig:
    queries: int = 5
    docs_per_query: int = 40
    classes: int = 2
    skew: tuple[float, ...] | None = None
    noise: float = 0.0
    features: int = 10
    informative: int = 3
    seed: int = 42

    def proportions(self) -> np.ndarray:
        if self.skew is None:
            p = np.full(self.classes, 1.0 / self.classes)
        else:
            p = np.asarray(self.skew, dtype=np.float64)
            if len(p) != self.classes:
                raise ValueError(f"skew has {len(p)} entries for {self.classes} classes")
            if np.any(p < 0) or p.sum() <= 0:
                raise ValueError("skew entries must be non-negative with a positive sum")
            p = p / p.sum()
        return p


def allocate(proportions: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` documents to classes."""
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    remainder = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:remainder]] += 1
    return counts


def generate(config: SynthConfig, rng: np.random.Generator | None = None) -> Dataset:
    """Documents whose informative features are centred on their grade.

    Informative feature ``f`` of a grade-``c`` document is
    ``c + 0.5 * U(0, 1) + noise * N(0, 1)``; the remaining features are pure
    ``U(0, 1)`` noise. With ``noise == 0`` sorting by any informative feature
    orders the documents perfectly by grade.
    """
    if config.classes < 2:
        raise ValueError("need at least two classes")
    if config.informative > config.features or config.informative < 1:
        raise ValueError("informative features must be between 1 and features")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    counts = allocate(config.proportions(), config.docs_per_query)

    labels = []
    features = []
    for _ in range(config.queries):
        y = rng.permutation(np.repeat(np.arange(config.classes), counts))
        x = rng.uniform(0.0, 1.0, size=(len(y), config.features))
        informative = y[:, None] + 0.5 * rng.uniform(0.0, 1.0, size=(len(y), config.informative))
        if config.noise > 0:
            informative = informative + config.noise * rng.standard_normal(informative.shape)
        x[:, : config.informative] = informative
        labels.append(y)
        features.append(x)
    offsets = np.arange(config.queries + 1) * config.docs_per_query
    return Dataset([str(q + 1) for q in range(config.queries)],
                   np.vstack(features), np.concatenate(labels), offsets)


def generate_fold(config: SynthConfig) -> tuple[Dataset, Dataset, Dataset]:
    """Train, validation and test splits drawn from one seeded stream."""
    rng = np.random.default_rng(config.seed)
    splits = [generate(config, rng) for _ in range(3)]
    for k, split in enumerate(splits):
        split.query_ids[:] = [f"{k}{q:04d}" for q in range(1, split.num_queries + 1)]
    return tuple(splits)


def write_folds(root: str | os.PathLike, config: SynthConfig, folds: int = 1) -> list[str]:
    """Write ``<root>/Fold<k>/{train,vali,test}.txt`` for ``k = 1..folds``."""
    from .atomic import atomic_write

    written = []
    for fold in range(1, folds + 1):
        fold_config = SynthConfig(**{**config.__dict__, "seed": config.seed + fold - 1})
        fold_dir = os.path.join(root, f"Fold{fold}")
        os.makedirs(fold_dir, exist_ok=True)
        for name, split in zip(("train.txt", "vali.txt", "test.txt"), generate_fold(fold_config)):
            path = os.path.join(fold_dir, name)
            with atomic_write(path) as fh:
                dump_dataset(split, fh)
            written.append(path)
    return written
