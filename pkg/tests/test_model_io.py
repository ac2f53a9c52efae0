import io
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdauc import model_io
from lambdauc.boosting import Ensemble, TrainConfig, predict, train
from lambdauc.model_io import FORMAT_VERSION, ModelFormatError
from lambdauc.tree import Tree

finite = st.floats(allow_nan=False, allow_infinity=False)


@st.composite
def trees(draw, num_features=6, max_depth=4):
    feature, threshold, left, right, value = [], [], [], [], []

    def node(depth):
        index = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        if depth < max_depth and draw(st.booleans()):
            feature[index] = draw(st.integers(0, num_features - 1))
            threshold[index] = draw(finite)
            left[index] = node(depth + 1)
            right[index] = node(depth + 1)
        else:
            value[index] = draw(finite)
        return index

    node(0)
    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(value))


ensembles = st.builds(
    Ensemble,
    trees=st.lists(trees(), max_size=8),
    shrinkage=st.floats(0.01, 1.0),
    num_features=st.just(6),
    metric=st.sampled_from(["auc", "mauc", "ndcg@10"]),
)


def bits(a):
    return [struct.pack("<d", v) for v in np.asarray(a, dtype=float)]


class TestRoundTrip:
    def test_empty_ensemble(self):
        text = model_io.dumps(Ensemble([], 0.1, 4, "auc"))
        assert text.splitlines()[0] == FORMAT_VERSION
        assert "num_trees 0" in text
        assert not any(line.startswith("tree") for line in text.splitlines())
        assert model_io.loads(text) == Ensemble([], 0.1, 4, "auc")

    @settings(max_examples=80, deadline=None)
    @given(ensembles)
    def test_bit_exact(self, ens):
        text = model_io.dumps(ens)
        back = model_io.loads(text)
        assert back == ens
        for a, b in zip(ens.trees, back.trees):
            assert bits(a.threshold) == bits(b.threshold)
            assert bits(a.value) == bits(b.value)
        assert model_io.dumps(back) == text

    def test_negative_zero(self):
        tree = Tree(np.array([0, -1, -1]), np.array([-0.0, 0, 0]), np.array([1, -1, -1]),
                    np.array([2, -1, -1]), np.array([0.0, -0.0, 5e-324]))
        back = model_io.loads(model_io.dumps(Ensemble([tree], 0.5, 1)))
        assert bits(back.trees[0].threshold) == bits(tree.threshold)
        assert bits(back.trees[0].value) == bits(tree.value)

    def test_hundred_tree_model(self, skewed_fold, tmp_path):
        train_set = skewed_fold[0]
        ens, _ = train(train_set, None, TrainConfig(metric="mauc", num_trees=100, learning_rate=0.1))
        assert len(ens) == 100
        path = tmp_path / "m.txt"
        model_io.save(ens, path)
        back = model_io.load(path)
        assert back == ens
        assert back.metric == "mauc"
        assert predict(back, train_set.features).tobytes() == predict(ens, train_set.features).tobytes()
        model_io.save(back, tmp_path / "m2.txt")
        assert (tmp_path / "m2.txt").read_bytes() == path.read_bytes()


SAMPLE = """lmart-auc/1
metric auc
shrinkage 0x1.0000000000000p-2
num_features 2
num_trees 2
tree 0 3
split 1 0x1.0000000000000p-1
leaf 0x1.0000000000000p+0
leaf -0x1.0000000000000p+0
tree 1 1
leaf 0x1.8000000000000p+0
"""


class TestErrors:
    def test_sample_parses(self):
        ens = model_io.loads(SAMPLE)
        np.testing.assert_array_equal(predict(ens, np.array([[0, 0.0], [0, 1.0]])), [0.625, 0.125])

    def test_unknown_version(self):
        with pytest.raises(ModelFormatError, match="lmart-auc/9"):
            model_io.loads(SAMPLE.replace("lmart-auc/1", "lmart-auc/9"))

    def test_node_count_too_large(self):
        with pytest.raises(ModelFormatError, match="tree 0"):
            model_io.loads(SAMPLE.replace("tree 0 3", "tree 0 5"))

    def test_node_count_too_small(self):
        with pytest.raises(ModelFormatError, match="tree 0"):
            model_io.loads(SAMPLE.replace("tree 0 3", "tree 0 2"))

    def test_truncated_block(self):
        truncated = "".join(SAMPLE.splitlines(keepends=True)[:-1])
        with pytest.raises(ModelFormatError, match="tree 1"):
            model_io.loads(truncated)

    def test_missing_header(self):
        with pytest.raises(ModelFormatError, match="shrinkage"):
            model_io.loads("lmart-auc/1\nmetric auc\n")

    def test_bad_real(self):
        with pytest.raises(ModelFormatError, match="tree 1 node 0"):
            model_io.loads(SAMPLE.replace("leaf 0x1.8000000000000p+0", "leaf zz"))

    def test_trailing_garbage(self):
        with pytest.raises(ModelFormatError):
            model_io.loads(SAMPLE + "tree 2 1\nleaf 0x0p+0\n")

    def test_feature_out_of_range(self):
        with pytest.raises(ModelFormatError, match="tree 0"):
            model_io.loads(SAMPLE.replace("split 1", "split 7"))

    def test_sink_failure_propagates(self):
        class Broken(io.StringIO):
            def write(self, text):
                raise OSError("disk full")

        with pytest.raises(OSError):
            model_io.save(Ensemble([], 0.1, 1), Broken())
