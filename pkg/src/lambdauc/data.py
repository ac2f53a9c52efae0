"""Reading LETOR / SVMLight ranking files into query-grouped datasets.

A line looks like::

    2 qid:10 1:0.5 3:1.0 # docid=A

Feature indices are 1-based on disk and 0-based in memory. Features are
stored densely; indices absent from a line are filled with 0.0.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

MAX_LABEL = 31

SPLIT_FILES = {"train": "train.txt", "validation": "vali.txt", "test": "test.txt"}


class DataError(ValueError):
    """Raised for unusable ranking data (empty input, missing split, ...)."""


class ParseError(DataError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Document:
    features: np.ndarray
    label: int
    query_id: str
    ordinal: int


@dataclass(frozen=True)
class Query:
    """One query's documents, stored as views into the dataset arrays."""

    query_id: str
    features: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def documents(self) -> list[Document]:
        return [
            Document(self.features[i], int(self.labels[i]), self.query_id, i)
            for i in range(len(self.labels))
        ]


@dataclass
class Dataset:
    """Documents of all queries in contiguous storage.

    ``features`` has shape ``(num_documents, num_features)``; the documents of
    query ``q`` occupy rows ``offsets[q]:offsets[q + 1]``.
    """

    query_ids: list[str]
    features: np.ndarray
    labels: np.ndarray
    offsets: np.ndarray
    class_counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        if not self.class_counts:
            values, counts = np.unique(self.labels, return_counts=True)
            self.class_counts = {int(v): int(c) for v, c in zip(values, counts)}
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_documents(self) -> int:
        return len(self.labels)

    @property
    def num_queries(self) -> int:
        return len(self.query_ids)

    @property
    def num_classes(self) -> int:
        return len(self.class_counts)

    @property
    def class_proportions(self) -> dict[int, float]:
        total = sum(self.class_counts.values())
        return {c: n / total for c, n in self.class_counts.items()}

    @property
    def queries(self) -> list[Query]:
        return [self.query(q) for q in range(self.num_queries)]

    def query(self, q: int) -> Query:
        lo, hi = self.offsets[q], self.offsets[q + 1]
        return Query(self.query_ids[q], self.features[lo:hi], self.labels[lo:hi])

    def query_slices(self) -> Iterator[slice]:
        for q in range(self.num_queries):
            yield slice(int(self.offsets[q]), int(self.offsets[q + 1]))

    def with_num_features(self, num_features: int) -> "Dataset":
        """Return a copy zero-padded to ``num_features`` columns."""
        if num_features < self.num_features:
            raise ValueError("cannot shrink the feature count")
        if num_features == self.num_features:
            return self
        padded = np.zeros((self.num_documents, num_features))
        padded[:, : self.num_features] = self.features
        return Dataset(list(self.query_ids), padded, self.labels.copy(),
                       self.offsets.copy(), dict(self.class_counts))


def parse_line(text: str, line_number: int | None = None):
    """Parse one data line into ``(label, query_id, [(index, value), ...])``.

    Indices in the returned list are 0-based.
    """
    body = text.split("#", 1)[0]
    tokens = body.split()
    if not tokens:
        raise ParseError("empty line", line_number)
    try:
        label = int(tokens[0])
    except ValueError:
        raise ParseError(f"malformed label {tokens[0]!r}", line_number) from None
    if label < 0 or label > MAX_LABEL:
        raise ParseError(f"label {label} outside [0, {MAX_LABEL}]", line_number)
    if len(tokens) < 2 or not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
        raise ParseError("missing qid token", line_number)
    query_id = tokens[1][4:]

    pairs = []
    for token in tokens[2:]:
        index, sep, value = token.partition(":")
        if not sep:
            raise ParseError(f"malformed feature {token!r}", line_number)
        try:
            position = int(index) - 1
        except ValueError:
            raise ParseError(f"malformed feature index {index!r}", line_number) from None
        if position < 0:
            raise ParseError(f"feature index {index} must be >= 1", line_number)
        try:
            pairs.append((position, float(value)))
        except ValueError:
            raise ParseError(f"non-numeric feature value {value!r}", line_number) from None
    return label, query_id, pairs


def load_dataset(source: str | os.PathLike | TextIO | Iterable[str]) -> Dataset:
    """Load a ranking file, grouping documents by qid.

    ``source`` may be a path, an open text file, or any iterable of lines.
    Queries keep the order in which their qid first appears; documents keep
    their in-file order within a query, even when a qid's lines are not
    contiguous.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return load_dataset(fh)

    groups: dict[str, list[tuple[int, list]]] = {}
    max_index = -1
    for line_number, line in enumerate(source, start=1):
        if not line.split("#", 1)[0].strip():
            continue
        label, qid, pairs = parse_line(line, line_number)
        for index, _ in pairs:
            max_index = max(max_index, index)
        groups.setdefault(qid, []).append((label, pairs))

    if not groups:
        raise DataError("no documents in input")

    num_features = max_index + 1
    total = sum(len(docs) for docs in groups.values())
    features = np.zeros((total, num_features))
    labels = np.empty(total, dtype=np.int64)
    offsets = [0]
    row = 0
    for docs in groups.values():
        for label, pairs in docs:
            labels[row] = label
            for index, value in pairs:
                features[row, index] = value
            row += 1
        offsets.append(row)
    return Dataset(list(groups), features, labels, np.array(offsets))


def dump_dataset(dataset: Dataset, sink: TextIO) -> None:
    """Write ``dataset`` in the line format, every feature included.

    Values use ``repr`` so that re-parsing restores them exactly.
    """
    for q, rows in enumerate(dataset.query_slices()):
        qid = dataset.query_ids[q]
        for row in range(rows.start, rows.stop):
            feats = " ".join(
                f"{i + 1}:{float(v)!r}" for i, v in enumerate(dataset.features[row])
            )
            sink.write(f"{dataset.labels[row]} qid:{qid} {feats}\n")


def dumps_dataset(dataset: Dataset) -> str:
    buf = io.StringIO()
    dump_dataset(dataset, buf)
    return buf.getvalue()


def load_fold(root: str | os.PathLike, fold: int) -> tuple[Dataset, Dataset, Dataset]:
    """Load ``<root>/Fold<fold>/{train,vali,test}.txt``.

    All three splits are padded to the largest feature count among them.
    """
    fold_dir = os.path.join(root, f"Fold{fold}")
    for split, name in SPLIT_FILES.items():
        if not os.path.isfile(os.path.join(fold_dir, name)):
            raise DataError(f"{split} split missing: {os.path.join(fold_dir, name)}")
    splits = [load_dataset(os.path.join(fold_dir, name)) for name in SPLIT_FILES.values()]
    width = max(d.num_features for d in splits)
    train, valid, test = (d.with_num_features(width) for d in splits)
    return train, valid, test


def list_folds(root: str | os.PathLike) -> list[int]:
    """Fold numbers present under ``root`` in ascending order."""
    folds = []
    for name in os.listdir(root):
        if name.startswith("Fold") and name[4:].isdigit():
            if os.path.isdir(os.path.join(root, name)):
                folds.append(int(name[4:]))
    return sorted(folds)
