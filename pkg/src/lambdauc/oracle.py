"""Brute-force swap deltas, used to check the closed-form ones.

Everything here recounts the metric from scratch on a physically swapped
copy of the list. It is quadratic (or worse) and only meant for short lists.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .lambdas import AUCMetric, MAUCMetric, NDCGMetric, SwapDeltaMetric

MAX_ORACLE_LENGTH = 64


def count_correct_pairs(ranked_labels, lo: int = 1, hi: int | None = None) -> int:
    """Pairs ``(a, b)``, ``a`` ranked above ``b``, with ``l_a > l_b``.

    Only ranks inside ``[lo, hi]`` (1-based, inclusive) are considered.
    """
    labels = list(ranked_labels)
    if hi is None:
        hi = len(labels)
    count = 0
    for a in range(lo - 1, hi):
        for b in range(a + 1, hi):
            if labels[a] > labels[b]:
                count += 1
    return count


def swapped(ranked_labels, i: int, j: int) -> list:
    labels = list(ranked_labels)
    labels[i - 1], labels[j - 1] = labels[j - 1], labels[i - 1]
    return labels


def correct_pair_change(ranked_labels, i: int, j: int, window: bool = False) -> int:
    """Change in the correct-pair count caused by swapping ranks ``i`` and ``j``.

    With ``window=True`` only pairs with both ends inside ``[i, j]`` count.
    """
    lo, hi = (min(i, j), max(i, j)) if window else (1, None)
    after = count_correct_pairs(swapped(ranked_labels, i, j), lo, hi)
    before = count_correct_pairs(ranked_labels, lo, hi)
    return after - before


def exact_auc(ranked_labels) -> Fraction:
    """Strict AUC of a ranked binary list as an exact fraction."""
    labels = [int(v > 0) for v in ranked_labels]
    m = sum(labels)
    n = len(labels) - m
    if m == 0 or n == 0:
        return Fraction(0)
    return Fraction(count_correct_pairs(labels), m * n)


def exact_mauc(ranked_labels, proportions) -> float:
    """Sum over classes of ``p(c) * AUC(c)``; single-sided classes add 0."""
    labels = list(ranked_labels)
    total = 0.0
    for c, p in proportions.items():
        binary = [int(v == c) for v in labels]
        m = sum(binary)
        if m == 0 or m == len(binary):
            continue
        total += p * float(exact_auc(binary))
    return total


def exact_ndcg(ranked_labels, k: int) -> float:
    labels = list(ranked_labels)

    def dcg(seq):
        return sum((2 ** seq[r] - 1) / math.log2(r + 2) for r in range(min(k, len(seq))))

    ideal = dcg(sorted(labels, reverse=True))
    return dcg(labels) / ideal if ideal > 0 else 0.0


def metric_value(ranked_labels, metric: SwapDeltaMetric) -> float:
    if isinstance(metric, AUCMetric):
        return exact_auc(ranked_labels)
    if isinstance(metric, MAUCMetric):
        return exact_mauc(ranked_labels, metric.proportions)
    if isinstance(metric, NDCGMetric):
        return exact_ndcg(ranked_labels, metric.k)
    raise TypeError(f"no oracle for {metric!r}")


def brute_force_delta(ranked_labels, i: int, j: int, metric: SwapDeltaMetric,
                      max_length: int = MAX_ORACLE_LENGTH) -> float:
    """Metric after swapping ranks ``i`` and ``j`` minus the metric before."""
    if len(ranked_labels) > max_length:
        raise ValueError(f"oracle limited to lists of length {max_length}")
    before = metric_value(ranked_labels, metric)
    after = metric_value(swapped(ranked_labels, i, j), metric)
    return float(after - before)
