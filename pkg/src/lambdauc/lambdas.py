"""Lambda gradients for AUC, multi-class AUC and NDCG@k.

Ranks are 1-based throughout: rank 1 is the top of the list. For a swap of
ranks ``i < j`` in a list with ``m`` positives and ``n`` negatives, the
change in AUC is ``(l_j - l_i) * (j - i) / (m * n)``; nothing else in the
list needs to be looked at.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import expit

DEFAULT_PAIR_BUDGET = 10_000_000


class UndefinedMetricError(ValueError):
    """The metric has no value for this query (e.g. only one class present)."""


@dataclass(frozen=True)
class RankedList:
    order: np.ndarray  # document ordinals, best first
    positions: np.ndarray  # 1-based rank of each document

    def __len__(self) -> int:
        return len(self.order)


def rank(scores) -> RankedList:
    """Sort by descending score; equal scores keep ascending ordinal order."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot rank an empty list")
    if np.isnan(scores).any():
        raise ValueError("NaN score")
    order = np.argsort(-scores, kind="stable")
    positions = np.empty(len(order), dtype=np.int64)
    positions[order] = np.arange(1, len(order) + 1)
    return RankedList(order, positions)


def delta_auc(ranked_labels, i: int, j: int, m: int, n: int) -> float:
    """Exact AUC change from swapping ranks ``i`` and ``j`` (binary labels)."""
    if m <= 0 or n <= 0:
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    return (ranked_labels[j - 1] - ranked_labels[i - 1]) * (j - i) / (m * n)


def delta_mauc(ranked_labels, i: int, j: int,
               class_counts: Mapping[int, int], proportions: Mapping[int, float]) -> float:
    """Prevalence-weighted sum of per-class AUC changes for swapping ``i, j``.

    ``class_counts`` are the counts within this list; classes that are all or
    none of the list contribute nothing.
    """
    total = sum(class_counts.values())
    li, lj = ranked_labels[i - 1], ranked_labels[j - 1]
    delta = 0.0
    for c, p in proportions.items():
        m = class_counts.get(c, 0)
        n = total - m
        if m == 0 or n == 0:
            continue
        delta += p * (int(lj == c) - int(li == c)) * (j - i) / (m * n)
    return delta


def dcg_discount(ranks, k: int):
    ranks = np.asarray(ranks, dtype=np.float64)
    return np.where(ranks <= k, 1.0 / np.log2(1.0 + ranks), 0.0)


def ideal_dcg(labels, k: int) -> float:
    gains = np.exp2(np.sort(np.asarray(labels))[::-1][:k]) - 1.0
    return float(np.sum(gains / np.log2(np.arange(2, len(gains) + 2))))


def delta_ndcg(ranked_labels, i: int, j: int, k: int, ideal: float) -> float:
    """NDCG@k change from swapping ranks ``i`` and ``j``."""
    if ideal <= 0:
        raise UndefinedMetricError("ideal DCG is zero")
    li, lj = ranked_labels[i - 1], ranked_labels[j - 1]
    di, dj = dcg_discount([i, j], k)
    return (2.0 ** li - 2.0 ** lj) * (dj - di) / ideal


def ranknet_rho(s_i: float, s_j: float) -> float:
    """Logistic pair weight ``1 / (1 + exp(s_i - s_j))``.

    ``s_i`` is the score of the document that should be ranked higher, so the
    weight tends to 1 for badly mis-ordered pairs and to 0 for safe ones.
    """
    return float(expit(s_j - s_i))


class SwapDeltaMetric:
    """Pluggable swap delta. Subclasses vectorise the delta over many pairs."""

    kind: str

    def prepare(self, labels: np.ndarray):
        """Per-query state, or ``None`` when the metric is undefined."""
        raise NotImplementedError

    def swap_deltas(self, ranked_labels: np.ndarray, i: np.ndarray, j: np.ndarray, state):
        """Deltas for swapping rank arrays ``i`` and ``j`` (``i < j``)."""
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.kind!r})"


class AUCMetric(SwapDeltaMetric):
    """Binary AUC. Multi-graded labels are binarised as ``label > 0``."""

    kind = "auc"

    def prepare(self, labels):
        m = int(np.count_nonzero(labels > 0))
        n = len(labels) - m
        if m == 0 or n == 0:
            return None
        return m * n

    def swap_deltas(self, ranked_labels, i, j, state):
        binary = (ranked_labels > 0).astype(np.float64)
        return (binary[j - 1] - binary[i - 1]) * (j - i) / state


class MAUCMetric(SwapDeltaMetric):
    """Multi-class AUC weighted by fixed class proportions.

    Per-class positive/negative counts come from each query; the weights
    ``proportions`` are usually the training set's class frequencies.
    """

    kind = "mauc"

    def __init__(self, proportions: Mapping[int, float]):
        self.proportions = {int(c): float(p) for c, p in proportions.items()}

    def prepare(self, labels):
        values, counts = np.unique(labels, return_counts=True)
        total = len(labels)
        coef = {}
        for c, m in zip(values.tolist(), counts.tolist()):
            n = total - m
            if n > 0 and c in self.proportions:
                coef[c] = self.proportions[c] / (m * n)
        if not coef:
            return None
        top = int(max(values)) + 1
        table = np.zeros(top)
        for c, w in coef.items():
            table[c] = w
        return table

    def swap_deltas(self, ranked_labels, i, j, state):
        # only the two swapped documents' classes change membership order
        w = state[ranked_labels]
        return (w[j - 1] - w[i - 1]) * (j - i)


class NDCGMetric(SwapDeltaMetric):
    def __init__(self, k: int):
        if k < 1:
            raise ValueError("NDCG cutoff must be >= 1")
        self.k = int(k)
        self.kind = f"ndcg@{self.k}"

    def prepare(self, labels):
        ideal = ideal_dcg(labels, self.k)
        return ideal if ideal > 0 else None

    def swap_deltas(self, ranked_labels, i, j, state):
        gain = np.exp2(ranked_labels.astype(np.float64))
        return (gain[i - 1] - gain[j - 1]) * (dcg_discount(j, self.k) - dcg_discount(i, self.k)) / state


def make_metric(name: str, proportions: Mapping[int, float] | None = None) -> SwapDeltaMetric:
    """Build a swap-delta metric from ``auc``, ``mauc`` or ``ndcg@k``."""
    name = name.strip().lower()
    if name == "auc":
        return AUCMetric()
    if name == "mauc":
        if proportions is None:
            raise ValueError("mauc needs class proportions")
        return MAUCMetric(proportions)
    if name.startswith("ndcg@"):
        return NDCGMetric(int(name[5:]))
    raise ValueError(f"unknown metric {name!r}")


@dataclass
class LambdaBuffer:
    lambdas: np.ndarray
    weights: np.ndarray
    defined: bool = True


def _conflicting_pairs(labels: np.ndarray, budget: int, rng: np.random.Generator | None):
    """Index pairs ``(hi, lo)`` with ``labels[hi] > labels[lo]`` and a scale factor."""
    n = len(labels)
    total = pair_count(labels)
    if total <= budget:
        a, b = np.triu_indices(n, 1)
        keep = labels[a] != labels[b]
        a, b = a[keep], b[keep]
        scale = 1.0
    else:
        if rng is None:
            rng = np.random.default_rng(0)
        chunks_a, chunks_b, have = [], [], 0
        while have < budget:
            a = rng.integers(0, n, size=2 * (budget - have) + 16)
            b = rng.integers(0, n, size=a.size)
            keep = labels[a] != labels[b]
            a, b = a[keep], b[keep]
            chunks_a.append(a)
            chunks_b.append(b)
            have += a.size
        a = np.concatenate(chunks_a)[:budget]
        b = np.concatenate(chunks_b)[:budget]
        # each unordered conflicting pair is drawn with equal probability
        scale = total / budget
    hi = np.where(labels[a] > labels[b], a, b)
    lo = np.where(labels[a] > labels[b], b, a)
    return hi, lo, scale


def accumulate_lambdas(labels, scores, metric: SwapDeltaMetric, *,
                       pair_budget: int = DEFAULT_PAIR_BUDGET,
                       rng: np.random.Generator | None = None,
                       orientation: str = "metric") -> LambdaBuffer:
    """Lambdas and second-order weights for one query.

    Every pair of documents with different labels contributes
    ``|delta| * rho`` to the preferred document, the same amount with the
    opposite sign to the other, and ``|delta| * rho * (1 - rho)`` to both
    weights.

    With ``orientation="label"`` the preferred document is always the one
    with the higher label. With ``"metric"`` it is the one whose placement
    above the other gives the larger metric value; for AUC and NDCG the two
    agree, for MAUC they can differ.
    """
    if orientation not in ("metric", "label"):
        raise ValueError(f"unknown orientation {orientation!r}")
    labels = np.asarray(labels, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ValueError("labels and scores differ in length")
    n = len(labels)
    lambdas = np.zeros(n)
    weights = np.zeros(n)
    state = metric.prepare(labels) if n else None
    if state is None:
        return LambdaBuffer(lambdas, weights, defined=False)

    ranked = rank(scores)
    ranked_labels = labels[ranked.order]
    hi, lo, scale = _conflicting_pairs(labels, pair_budget, rng)
    if hi.size == 0:
        return LambdaBuffer(lambdas, weights)

    pos_hi = ranked.positions[hi]
    pos_lo = ranked.positions[lo]
    i = np.minimum(pos_hi, pos_lo)
    j = np.maximum(pos_hi, pos_lo)
    signed = metric.swap_deltas(ranked_labels, i, j, state)
    if orientation == "metric":
        # a positive delta means the lower-ranked document should move up
        lower_is_hi = pos_hi > pos_lo
        flip = (signed > 0) != lower_is_hi
        hi, lo = np.where(flip, lo, hi), np.where(flip, hi, lo)
    delta = np.abs(signed) * scale
    rho = expit(scores[lo] - scores[hi])
    pair_lambda = delta * rho
    pair_weight = delta * rho * (1.0 - rho)

    lambdas += np.bincount(hi, pair_lambda, minlength=n)
    lambdas -= np.bincount(lo, pair_lambda, minlength=n)
    weights += np.bincount(hi, pair_weight, minlength=n)
    weights += np.bincount(lo, pair_weight, minlength=n)
    return LambdaBuffer(lambdas, weights)


def accumulate_dataset(dataset, scores, metric: SwapDeltaMetric, *,
                       pair_budget: int = DEFAULT_PAIR_BUDGET,
                       rng: np.random.Generator | None = None,
                       orientation: str = "metric") -> tuple[LambdaBuffer, int]:
    """Run :func:`accumulate_lambdas` over every query of ``dataset``.

    Returns the merged buffer and the number of queries where the metric is
    defined.
    """
    lambdas = np.zeros(dataset.num_documents)
    weights = np.zeros(dataset.num_documents)
    defined = 0
    for rows in dataset.query_slices():
        buf = accumulate_lambdas(dataset.labels[rows], scores[rows], metric,
                                 pair_budget=pair_budget, rng=rng, orientation=orientation)
        lambdas[rows] = buf.lambdas
        weights[rows] = buf.weights
        defined += buf.defined
    return LambdaBuffer(lambdas, weights, defined > 0), defined


def pair_count(labels) -> int:
    """Number of conflicting (different-label) pairs in a query."""
    _, counts = np.unique(np.asarray(labels), return_counts=True)
    n = int(counts.sum())
    return (n * n - int(np.sum(counts.astype(np.int64) ** 2))) // 2

