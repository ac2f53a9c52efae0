"""Least-squares regression trees grown best-first on lambda targets."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

MAX_THRESHOLDS = 256
LEAF_EPSILON = 1e-9


@dataclass(frozen=True)
class Tree:
    """A regression tree in preorder array form.

    Node ``t`` is a leaf when ``feature[t] == -1``; otherwise documents with
    ``x[feature[t]] <= threshold[t]`` go to ``left[t]`` and the rest to
    ``right[t]``. ``value`` is only meaningful at leaves.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @classmethod
    def leaf(cls, value: float) -> "Tree":
        return cls(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                   np.array([float(value)]))

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def leaf_count(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index reached by each row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        nodes = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[nodes] >= 0)
        while active.size:
            current = nodes[active]
            feats = self.feature[current]
            go_left = X[active, feats] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[nodes[active]] >= 0]
        return nodes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(
            (self.feature, self.threshold, self.left, self.right, self.value),
            (other.feature, other.threshold, other.left, other.right, other.value)))


def candidate_thresholds(column: np.ndarray, max_thresholds: int = MAX_THRESHOLDS) -> np.ndarray:
    """Midpoints between consecutive distinct values, thinned by quantile.

    When a feature has more than ``max_thresholds`` midpoints, the ones kept
    are those closest above evenly spaced quantiles of the document mass.
    """
    values, counts = np.unique(column, return_counts=True)
    if values.size < 2:
        return np.empty(0)
    mids = values[:-1] + (values[1:] - values[:-1]) / 2.0
    if mids.size <= max_thresholds:
        return mids
    # cumulative share of documents at or below each midpoint
    cum = np.cumsum(counts[:-1]) / counts.sum()
    targets = np.arange(1, max_thresholds + 1) / (max_thresholds + 1)
    picks = np.unique(np.minimum(np.searchsorted(cum, targets), mids.size - 1))
    return mids[picks]


@dataclass
class Binning:
    """Per-feature candidate thresholds and the bin of each training value.

    ``bins[d, f] <= t`` exactly when ``X[d, f] <= thresholds[f][t]``.
    """

    thresholds: list[np.ndarray]
    bins: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, max_thresholds: int = MAX_THRESHOLDS) -> "Binning":
        X = np.asarray(X, dtype=np.float64)
        thresholds = [candidate_thresholds(X[:, f], max_thresholds) for f in range(X.shape[1])]
        bins = np.empty(X.shape, dtype=np.int32)
        for f, thr in enumerate(thresholds):
            bins[:, f] = np.searchsorted(thr, X[:, f], side="left")
        return cls(thresholds, bins)

    @property
    def width(self) -> int:
        """Histogram slots per feature."""
        return max((len(t) for t in self.thresholds), default=0) + 1


@dataclass
class _Split:
    gain: float
    feature: int
    bin: int


def _best_split(binning: Binning, rows: np.ndarray, targets: np.ndarray,
                min_docs: int, min_gain: float) -> _Split | None:
    n = rows.size
    if n < 2 * min_docs or n < 2:
        return None
    num_features = binning.bins.shape[1]
    width = binning.width
    if width < 2:
        return None
    offsets = np.arange(num_features, dtype=np.int64) * width
    flat = (binning.bins[rows].astype(np.int64) + offsets).ravel()
    y = np.repeat(targets[rows], num_features)
    sums = np.bincount(flat, y, minlength=num_features * width).reshape(num_features, width)
    counts = np.bincount(flat, minlength=num_features * width).reshape(num_features, width)

    left_sum = np.cumsum(sums, axis=1)[:, :-1]
    left_n = np.cumsum(counts, axis=1)[:, :-1]
    total = targets[rows].sum()
    right_sum = total - left_sum
    right_n = n - left_n

    valid = (left_n >= max(min_docs, 1)) & (right_n >= max(min_docs, 1))
    n_thr = np.array([len(t) for t in binning.thresholds])
    valid &= np.arange(width - 1)[None, :] < n_thr[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = left_sum ** 2 / left_n + right_sum ** 2 / right_n - total ** 2 / n
    gain = np.where(valid, gain, -np.inf)
    # row-major argmax: lowest feature, then lowest threshold, wins ties
    best = int(np.argmax(gain))
    f, t = divmod(best, width - 1)
    if not np.isfinite(gain[f, t]) or gain[f, t] <= min_gain:
        return None
    return _Split(float(gain[f, t]), f, t)


def fit_tree(X: np.ndarray | None, lambdas, weights, *, max_leaves: int = 7,
             min_docs_per_leaf: int = 10, binning: Binning | None = None) -> Tree:
    """Fit a tree to ``lambdas`` by squared error, leaves set by a Newton step.

    Leaves are split best-first (largest squared-error reduction) until
    ``max_leaves`` is reached or no split leaves ``min_docs_per_leaf``
    documents on both sides. Each leaf outputs
    ``sum(lambdas) / (sum(weights) + 1e-9)`` over its documents.
    """
    if max_leaves < 2:
        raise ValueError("max_leaves must be >= 2")
    targets = np.asarray(lambdas, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if binning is None:
        binning = Binning.fit(X)
    if not np.any(targets):
        return Tree.leaf(0.0)

    min_gain = 1e-12 * float(np.dot(targets, targets))
    # node records: rows, and children once split
    nodes: list[dict] = [{"rows": np.arange(len(targets))}]
    heap: list[tuple[float, int, _Split]] = []

    def push(node_id: int):
        split = _best_split(binning, nodes[node_id]["rows"], targets, min_docs_per_leaf, min_gain)
        if split is not None:
            heapq.heappush(heap, (-split.gain, node_id, split))

    push(0)
    leaves = 1
    while heap and leaves < max_leaves:
        _, node_id, split = heapq.heappop(heap)
        node = nodes[node_id]
        rows = node["rows"]
        goes_left = binning.bins[rows, split.feature] <= split.bin
        node["split"] = split
        node["children"] = (len(nodes), len(nodes) + 1)
        nodes.append({"rows": rows[goes_left]})
        nodes.append({"rows": rows[~goes_left]})
        push(node["children"][0])
        push(node["children"][1])
        leaves += 1

    feature, threshold, left, right, value = [], [], [], [], []

    def emit(node_id: int) -> int:
        index = len(feature)
        node = nodes[node_id]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if "split" in node:
            split = node["split"]
            feature[index] = split.feature
            threshold[index] = float(binning.thresholds[split.feature][split.bin])
            left[index] = emit(node["children"][0])
            right[index] = emit(node["children"][1])
        else:
            rows = node["rows"]
            value[index] = targets[rows].sum() / (weights[rows].sum() + LEAF_EPSILON)
        return index

    emit(0)
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value))
