"""Text model files with bit-exact real values.

Layout (reals are ``float.hex`` strings)::

    lmart-auc/1
    metric auc
    shrinkage 0x1.0000000000000p-2
    num_features 10
    num_trees 1
    tree 0 3
    split 0 0x1.8000000000000p+0
    leaf 0x1.0000000000000p+1
    leaf -0x1.0000000000000p+1

Each ``tree <index> <node_count>`` line is followed by its nodes in
preorder: ``split <feature> <threshold>`` (left subtree first) or
``leaf <value>``.
"""

from __future__ import annotations

import io
import os
from typing import Iterable, TextIO

import numpy as np

from .boosting import Ensemble
from .tree import Tree

FORMAT_VERSION = "lmart-auc/1"


class ModelFormatError(ValueError):
    pass


def _real(value: float) -> str:
    return float(value).hex()


def save(ensemble: Ensemble, sink: TextIO | str | os.PathLike) -> None:
    if isinstance(sink, (str, os.PathLike)):
        from .atomic import atomic_write

        with atomic_write(sink) as fh:
            save(ensemble, fh)
        return
    sink.write(f"{FORMAT_VERSION}\n")
    sink.write(f"metric {ensemble.metric}\n")
    sink.write(f"shrinkage {_real(ensemble.shrinkage)}\n")
    sink.write(f"num_features {ensemble.num_features}\n")
    sink.write(f"num_trees {len(ensemble.trees)}\n")
    for index, tree in enumerate(ensemble.trees):
        sink.write(f"tree {index} {tree.node_count}\n")
        for node in _preorder(tree):
            if tree.feature[node] < 0:
                sink.write(f"leaf {_real(tree.value[node])}\n")
            else:
                sink.write(f"split {int(tree.feature[node])} {_real(tree.threshold[node])}\n")


def dumps(ensemble: Ensemble) -> str:
    buf = io.StringIO()
    save(ensemble, buf)
    return buf.getvalue()


def _preorder(tree: Tree) -> list[int]:
    order, stack = [], [0]
    while stack:
        node = stack.pop()
        order.append(node)
        if tree.feature[node] >= 0:
            stack.append(int(tree.right[node]))
            stack.append(int(tree.left[node]))
    return order


def _header(lines, key: str) -> str:
    line = next(lines, None)
    if line is None:
        raise ModelFormatError(f"truncated header: missing {key}")
    name, _, value = line.partition(" ")
    if name != key or not value:
        raise ModelFormatError(f"expected header field {key!r}, found {line!r}")
    return value


def _parse_real(text: str, where: str) -> float:
    try:
        return float.fromhex(text)
    except ValueError:
        raise ModelFormatError(f"{where}: bad real {text!r}") from None


def _read_tree(lines, index: int) -> Tree:
    line = next(lines, None)
    if line is None:
        raise ModelFormatError(f"tree {index}: block missing")
    parts = line.split()
    if len(parts) != 3 or parts[0] != "tree" or parts[1] != str(index):
        raise ModelFormatError(f"tree {index}: bad block header {line!r}")
    try:
        declared = int(parts[2])
    except ValueError:
        raise ModelFormatError(f"tree {index}: bad node count {parts[2]!r}") from None
    if declared < 1:
        raise ModelFormatError(f"tree {index}: bad node count {declared}")

    feature, threshold, left, right, value = [], [], [], [], []

    def read_node() -> int:
        if len(feature) >= declared:
            raise ModelFormatError(f"tree {index}: more nodes than the declared {declared}")
        raw = next(lines, None)
        if raw is None:
            raise ModelFormatError(f"tree {index}: truncated after {len(feature)} of {declared} nodes")
        fields = raw.split()
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        where = f"tree {index} node {node}"
        if fields[:1] == ["leaf"] and len(fields) == 2:
            value[node] = _parse_real(fields[1], where)
        elif fields[:1] == ["split"] and len(fields) == 3:
            try:
                feature[node] = int(fields[1])
            except ValueError:
                raise ModelFormatError(f"{where}: bad feature {fields[1]!r}") from None
            threshold[node] = _parse_real(fields[2], where)
            left[node] = read_node()
            right[node] = read_node()
        else:
            raise ModelFormatError(f"tree {index}: malformed node line {raw!r}")
        return node

    read_node()
    if len(feature) != declared:
        raise ModelFormatError(f"tree {index}: declared {declared} nodes, found {len(feature)}")
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value))


def load(source: TextIO | str | os.PathLike | Iterable[str]) -> Ensemble:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load(fh)
    lines = (line.rstrip("\n") for line in source)
    version = next(lines, None)
    if version is None:
        raise ModelFormatError("empty model file")
    if version.strip() != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {version.strip()!r}, expected {FORMAT_VERSION!r}")
    metric = _header(lines, "metric")
    shrinkage = _parse_real(_header(lines, "shrinkage"), "header")
    try:
        num_features = int(_header(lines, "num_features"))
        num_trees = int(_header(lines, "num_trees"))
    except ValueError as exc:
        raise ModelFormatError(f"bad header integer: {exc}") from None
    trees = [_read_tree(lines, index) for index in range(num_trees)]
    trailing = next(lines, None)
    if trailing is not None and trailing.strip():
        raise ModelFormatError(f"unexpected content after tree {num_trees - 1}: {trailing!r}")
    for index, tree in enumerate(trees):
        if np.any(tree.feature >= num_features):
            raise ModelFormatError(f"tree {index}: feature index beyond num_features {num_features}")
    return Ensemble(trees, shrinkage, num_features, metric)


def loads(text: str) -> Ensemble:
    return load(io.StringIO(text))
