import io
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdauc.data import (
    DataError,
    Dataset,
    ParseError,
    dumps_dataset,
    load_dataset,
    load_fold,
    parse_line,
)


class TestParseLine:
    def test_basic(self):
        assert parse_line("2 qid:10 1:0.5 3:1.0") == (2, "10", [(0, 0.5), (2, 1.0)])

    def test_comment_stripped(self):
        assert parse_line("0 qid:1 1:0 # docid=A") == (0, "1", [(0, 0.0)])

    def test_malformed_label_reports_line(self):
        with pytest.raises(ParseError) as err:
            parse_line("abc qid:1 1:0", line_number=7)
        assert err.value.line_number == 7
        assert "line 7" in str(err.value)

    @pytest.mark.parametrize("line", ["1 1:0.5", "1 qid: 1:0.5", "1"])
    def test_missing_qid(self, line):
        with pytest.raises(ParseError, match="qid"):
            parse_line(line)

    @pytest.mark.parametrize("line", ["1 qid:1 1:abc", "1 qid:1 x:1", "1 qid:1 0:1.0", "1 qid:1 3"])
    def test_bad_features(self, line):
        with pytest.raises(ParseError):
            parse_line(line)

    @pytest.mark.parametrize("label", ["-1", "32"])
    def test_label_range(self, label):
        with pytest.raises(ParseError, match="label"):
            parse_line(f"{label} qid:1 1:0")

    def test_label_31_accepted(self):
        assert parse_line("31 qid:1 1:0")[0] == 31


LINES = [
    "1 qid:1 1:0.1 2:0.2",
    "0 qid:2 1:0.3",
    "0 qid:1 2:0.5",
    "2 qid:2 1:0.4 2:0.6 # trailing",
]


class TestLoadDataset:
    def test_grouping_and_counts(self):
        ds = load_dataset(LINES)
        assert ds.query_ids == ["1", "2"]
        assert [len(q) for q in ds.queries] == [2, 2]
        assert ds.num_features == 2
        assert ds.num_classes == 3
        assert ds.class_counts == {0: 2, 1: 1, 2: 1}

    def test_non_contiguous_qid_merged_in_file_order(self):
        q1 = load_dataset(LINES).query(0)
        np.testing.assert_array_equal(q1.labels, [1, 0])
        np.testing.assert_array_equal(q1.features, [[0.1, 0.2], [0.0, 0.5]])

    def test_documents_view(self):
        docs = load_dataset(LINES).query(1).documents
        assert [(d.query_id, d.ordinal, d.label) for d in docs] == [("2", 0, 0), ("2", 1, 2)]
        assert len(docs[0].features) == 2

    def test_proportions(self):
        ds = load_dataset(["0 qid:1 1:1", "0 qid:1 1:2", "1 qid:1 1:3"])
        p = ds.class_proportions
        assert p[0] == pytest.approx(2 / 3)
        assert p[1] == pytest.approx(1 / 3)
        assert sum(p.values()) == pytest.approx(1.0, abs=1e-12)

    def test_empty_input(self):
        with pytest.raises(DataError):
            load_dataset(["", "   "])

    def test_parse_error_propagates_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            load_dataset(["1 qid:1 1:0", "x qid:1 1:0"])

    def test_from_path(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("\n".join(LINES) + "\n")
        assert load_dataset(path).num_documents == 4

    def test_immutable_arrays(self):
        ds = load_dataset(LINES)
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0


documents = st.lists(
    st.tuples(
        st.integers(0, 4),
        st.sampled_from(["a", "b", "7", "q9"]),
        st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=3, max_size=3),
    ),
    min_size=1, max_size=30,
)


@settings(max_examples=60, deadline=None)
@given(documents)
def test_round_trip_and_conservation(docs):
    lines = [f"{y} qid:{q} " + " ".join(f"{i + 1}:{v!r}" for i, v in enumerate(x)) for y, q, x in docs]
    ds = load_dataset(lines)
    assert ds.num_documents == len(lines)
    assert ds.num_queries == len({q for _, q, _ in docs})
    assert sum(ds.class_counts.values()) == len(lines)
    assert sum(ds.class_proportions.values()) == pytest.approx(1.0, abs=1e-12)

    again = load_dataset(io.StringIO(dumps_dataset(ds)))
    assert again.query_ids == ds.query_ids
    np.testing.assert_array_equal(again.labels, ds.labels)
    np.testing.assert_array_equal(again.offsets, ds.offsets)
    assert again.features.tobytes() == ds.features.tobytes()


def _write_fold(root, widths=(5, 5, 7), skip=None):
    fold = root / "Fold1"
    fold.mkdir()
    for name, width in zip(("train.txt", "vali.txt", "test.txt"), widths):
        if name == skip:
            continue
        (fold / name).write_text(f"1 qid:1 {width}:1.0\n0 qid:1 1:0.5\n")


class TestLoadFold:
    def test_three_splits(self, tmp_path):
        _write_fold(tmp_path)
        splits = load_fold(tmp_path, 1)
        assert len(splits) == 3
        assert all(isinstance(s, Dataset) for s in splits)

    def test_feature_count_is_max(self, tmp_path):
        _write_fold(tmp_path)
        assert [s.num_features for s in load_fold(tmp_path, 1)] == [7, 7, 7]

    def test_missing_validation(self, tmp_path):
        _write_fold(tmp_path, skip="vali.txt")
        with pytest.raises(DataError, match="validation split missing"):
            load_fold(tmp_path, 1)

    def test_missing_fold_dir(self, tmp_path):
        with pytest.raises(DataError, match="train split missing"):
            load_fold(tmp_path, 3)
        assert not os.path.exists(tmp_path / "Fold3")
