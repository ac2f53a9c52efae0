"""Evaluation metrics: AUC, class-reference AUC, MAUC, precision@k, MAP, NDCG@k.

Per-query functions take one query's scores and labels (or labels already
in ranked order). Report functions take ``runs``, an iterable of
``(query_id, scores, labels)`` triples, and return a :class:`MetricReport`
whose aggregate is the mean over queries where the metric is defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .lambdas import rank

Run = tuple[str, Sequence[float], Sequence[int]]


@dataclass(frozen=True)
class ContingencyTable:
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def at_cutoff(cls, ranked_labels, k: int, positive: int) -> "ContingencyTable":
        """Top-``k`` documents predicted positive for class ``positive``."""
        relevant = np.asarray(ranked_labels) == positive
        cut = min(k, len(relevant))
        tp = int(np.count_nonzero(relevant[:cut]))
        fn = int(np.count_nonzero(relevant[cut:]))
        return cls(tp, cut - tp, fn, len(relevant) - cut - fn)

    @property
    def precision(self) -> float:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else 0.0


@dataclass
class MetricReport:
    name: str
    values: list[tuple[str, float | None]] = field(default_factory=list)

    @property
    def defined(self) -> list[float]:
        return [v for _, v in self.values if v is not None]

    @property
    def aggregate(self) -> float | None:
        vals = self.defined
        return float(np.mean(vals)) if vals else None

    @property
    def skipped(self) -> int:
        return sum(v is None for _, v in self.values)


def ranked_labels_of(scores, labels) -> np.ndarray:
    return np.asarray(labels)[rank(scores).order]


def correct_pairs(ranked_labels) -> int:
    """Positive-above-negative pairs in a ranked binary list."""
    count = 0
    positives_seen = 0
    for label in ranked_labels:
        if label:
            positives_seen += 1
        else:
            count += positives_seen
    return count


def auc_binary(scores, labels) -> float | None:
    """Wilcoxon-Mann-Whitney AUC; tied cross-class pairs count one half.

    Returns ``None`` when either class is empty.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(labels) != 0
    if scores.shape != positive.shape:
        raise ValueError("scores and labels differ in length")
    m = int(np.count_nonzero(positive))
    n = len(positive) - m
    if m == 0 or n == 0:
        return None
    ranks = rankdata(scores)
    u = float(np.sum(ranks[positive])) - m * (m + 1) / 2.0
    return u / (m * n)


def class_reference_auc(scores, labels, positive_class: int) -> float | None:
    return auc_binary(scores, np.asarray(labels) == positive_class)


def mauc_query(scores, labels, proportions: Mapping[int, float]) -> float | None:
    """Proportion-weighted class-reference AUCs of one query.

    Weights are renormalised over the classes whose AUC is defined here.
    """
    total = weight = 0.0
    for c, p in proportions.items():
        value = class_reference_auc(scores, labels, c)
        if value is None:
            continue
        total += value * p
        weight += p
    if weight == 0.0:
        return None
    return total / weight


def precision_at_k(ranked_labels, k: int, positive_class: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return ContingencyTable.at_cutoff(ranked_labels, k, positive_class).precision


def precision_micro_query(ranked_labels, k: int, classes: Iterable[int]) -> float:
    """Precision@k pooled over the contingency tables of ``classes``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tables = [ContingencyTable.at_cutoff(ranked_labels, k, c) for c in classes]
    predicted = sum(t.tp + t.fp for t in tables)
    return sum(t.tp for t in tables) / predicted if predicted else 0.0


def average_precision(ranked_labels) -> float | None:
    relevant = np.asarray(ranked_labels) > 0
    hits = np.flatnonzero(relevant)
    if hits.size == 0:
        return None
    precisions = np.arange(1, hits.size + 1) / (hits + 1)
    return float(np.mean(precisions))


def ndcg_query(ranked_labels, k: int) -> float | None:
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = np.asarray(ranked_labels, dtype=np.float64)
    discounts = 1.0 / np.log2(np.arange(2, min(k, len(labels)) + 2))
    ideal = np.sort(labels)[::-1][: len(discounts)]
    idcg = float(np.sum((np.exp2(ideal) - 1.0) * discounts))
    if idcg == 0.0:
        return None
    dcg = float(np.sum((np.exp2(labels[: len(discounts)]) - 1.0) * discounts))
    return dcg / idcg


def _report(name: str, runs: Iterable[Run], fn) -> MetricReport:
    report = MetricReport(name)
    for qid, scores, labels in runs:
        report.values.append((qid, fn(np.asarray(scores), np.asarray(labels))))
    return report


def auc(runs: Iterable[Run]) -> MetricReport:
    """Per-query AUC with ``label > 0`` as the positive class."""
    return _report("auc", runs, lambda s, y: auc_binary(s, y > 0))


def class_reference_aucs(runs: Iterable[Run], positive_class: int) -> MetricReport:
    return _report(f"auc(c{positive_class})", runs,
                   lambda s, y: class_reference_auc(s, y, positive_class))


def mauc(runs: Iterable[Run], proportions: Mapping[int, float]) -> MetricReport:
    return _report("mauc", runs, lambda s, y: mauc_query(s, y, proportions))


def precision_micro_at_k(runs: Iterable[Run], k: int, classes: Iterable[int]) -> MetricReport:
    if k < 1:
        raise ValueError("k must be >= 1")
    classes = sorted(classes)
    return _report(f"micro@{k}", runs,
                   lambda s, y: precision_micro_query(ranked_labels_of(s, y), k, classes))


def precision_macro_at_k(runs: Iterable[Run], k: int, classes: Iterable[int]) -> MetricReport:
    """Per-class precision@k averaged over queries, then over classes.

    The per-query value reported is the mean over classes for that query,
    which gives the same aggregate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    classes = sorted(classes)

    def per_query(s, y):
        ranked = ranked_labels_of(s, y)
        return float(np.mean([precision_at_k(ranked, k, c) for c in classes]))

    return _report(f"macro@{k}", runs, per_query)


def mean_average_precision(runs: Iterable[Run]) -> MetricReport:
    return _report("map", runs, lambda s, y: average_precision(ranked_labels_of(s, y)))


def ndcg_at_k(runs: Iterable[Run], k: int) -> MetricReport:
    return _report(f"ndcg@{k}", runs, lambda s, y: ndcg_query(ranked_labels_of(s, y), k))


def dataset_runs(dataset, scores) -> list[Run]:
    """Split flat ``scores`` aligned with ``dataset`` into per-query runs."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != dataset.num_documents:
        raise ValueError("one score per document expected")
    return [(dataset.query_ids[q], scores[rows], dataset.labels[rows])
            for q, rows in enumerate(dataset.query_slices())]


def positive_classes(class_counts: Mapping[int, int]) -> list[int]:
    return sorted(c for c in class_counts if c >= 1)


def evaluate(name: str, runs: Sequence[Run], class_counts: Mapping[int, int]) -> list[MetricReport]:
    """Reports for a metric name such as ``auc``, ``mauc``, ``classauc``,
    ``map``, ``micro@5``, ``macro@3`` or ``ndcg@10``.

    ``classauc`` expands to one report per observed class.
    """
    name = name.strip().lower()
    total = sum(class_counts.values())
    proportions = {c: n / total for c, n in class_counts.items()}
    if name == "auc":
        return [auc(runs)]
    if name == "mauc":
        return [mauc(runs, proportions)]
    if name == "classauc":
        return [class_reference_aucs(runs, c) for c in sorted(class_counts)]
    if name == "map":
        return [mean_average_precision(runs)]
    base, _, cutoff = name.partition("@")
    if cutoff:
        k = int(cutoff)
        if base == "micro":
            return [precision_micro_at_k(runs, k, positive_classes(class_counts))]
        if base == "macro":
            return [precision_macro_at_k(runs, k, positive_classes(class_counts))]
        if base == "ndcg":
            return [ndcg_at_k(runs, k)]
    raise ValueError(f"unknown metric {name!r}")


def format_table(rows: Sequence[tuple[str, Mapping[str, float | None]]]) -> str:
    """Aligned plain-text table; each row is ``(label, {column: value})``."""
    columns: list[str] = []
    for _, values in rows:
        for col in values:
            if col not in columns:
                columns.append(col)
    header = ["", *columns]
    body = [[label, *("-" if values.get(c) is None else f"{values[c]:.4f}" for c in columns)]
            for label, values in rows]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                       for i, (cell, w) in enumerate(zip(r, widths))).rstrip()
             for r in [header, *body]]
    return "\n".join(lines) + "\n"


def format_tsv(reports: Iterable[MetricReport]) -> str:
    """``metric<TAB>query_id<TAB>value`` rows plus one ``aggregate`` row per metric."""
    lines = []
    for report in reports:
        for qid, value in report.values:
            lines.append(f"{report.name}\t{qid}\t{'skipped' if value is None else repr(value)}")
        agg = report.aggregate
        lines.append(f"{report.name}\taggregate\t{'skipped' if agg is None else repr(agg)}")
    return "\n".join(lines) + "\n"
