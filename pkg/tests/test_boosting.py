import logging

import numpy as np
import pytest

from lambdauc import metrics
from lambdauc.boosting import (
    MAUC_BINARY_WARNING,
    Ensemble,
    TrainConfig,
    TrainingError,
    evaluate_metric,
    predict,
    train,
)
from lambdauc.data import Dataset
from lambdauc.tree import Tree


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"num_trees": 0}, {"learning_rate": 0.0}, {"learning_rate": 1.5}, {"max_leaves": 1},
        {"metric": "rmse"}, {"orientation": "sideways"}, {"min_docs_per_leaf": 0},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_defaults(self):
        config = TrainConfig()
        assert (config.num_trees, config.max_leaves, config.min_docs_per_leaf, config.patience) == (100, 7, 10, 50)


class TestPredict:
    def test_empty_ensemble(self):
        assert not predict(Ensemble([], 0.1, 3), np.ones((4, 3))).any()

    def test_single_leaf(self):
        scores = predict(Ensemble([Tree.leaf(2.0)], 0.25, 2), np.ones((3, 2)))
        np.testing.assert_array_equal(scores, [0.5] * 3)

    def test_pads_missing_features(self):
        tree = Tree(np.array([2, -1, -1]), np.array([0.5, 0, 0]), np.array([1, -1, -1]),
                    np.array([2, -1, -1]), np.array([0.0, -1.0, 1.0]))
        ens = Ensemble([tree], 1.0, 3)
        np.testing.assert_array_equal(predict(ens, np.ones((2, 2))), [-1.0, -1.0])
        with pytest.raises(ValueError):
            predict(ens, np.ones((2, 4)))

    def test_shrinkage_linearity(self, separable_fold):
        train_set = separable_fold[0]
        ens, _ = train(train_set, None, TrainConfig(num_trees=5, learning_rate=0.25))
        doubled = Ensemble(ens.trees, 0.5, ens.num_features, ens.metric)
        np.testing.assert_array_equal(predict(doubled, train_set.features),
                                      2 * predict(ens, train_set.features))


class TestTrain:
    def test_separable_binary(self, separable_fold):
        train_set, _, test_set = separable_fold
        ens, history = train(train_set, None, TrainConfig(metric="auc", num_trees=50, learning_rate=0.25))
        assert history.train[-1] >= 0.99
        assert history.train[-1] > history.train[0]
        assert evaluate_metric("auc", test_set, predict(ens, test_set.features)) >= 0.95

    def test_without_validation(self, separable_fold):
        ens, history = train(separable_fold[0], None, TrainConfig(num_trees=4))
        assert len(ens) == 4
        assert history.valid is None
        assert history.iterations == [0, 1, 2, 3, 4]
        assert history.to_csv().splitlines()[1].endswith(",")

    def test_validation_selection(self, skewed_fold):
        train_set, valid_set, _ = skewed_fold
        config = TrainConfig(metric="mauc", num_trees=30, learning_rate=0.5, patience=100)
        ens, history = train(train_set, valid_set, config)
        best = max(v for v in history.valid)
        assert history.valid[history.best_iteration] == best
        assert history.valid.index(best) == history.best_iteration
        assert len(ens) == history.best_iteration
        full, _ = train(train_set, None, config)
        full_value = evaluate_metric("mauc", valid_set, predict(full, valid_set.features))
        chosen = evaluate_metric("mauc", valid_set, predict(ens, valid_set.features))
        assert chosen >= full_value
        assert chosen == best

    def test_early_stopping(self, skewed_fold):
        train_set, valid_set, _ = skewed_fold
        _, history = train(train_set, valid_set, TrainConfig(metric="mauc", num_trees=200,
                                                             learning_rate=0.9, patience=3))
        assert history.iterations[-1] == history.best_iteration + 3
        assert history.iterations[-1] < 200

    def test_deterministic(self, skewed_fold):
        config = TrainConfig(metric="mauc", num_trees=10, learning_rate=0.25)
        a, ha = train(skewed_fold[0], skewed_fold[1], config)
        b, hb = train(skewed_fold[0], skewed_fold[1], config)
        assert a == b
        assert ha.to_csv() == hb.to_csv()

    def test_ndcg_metric(self, skewed_fold):
        ens, history = train(skewed_fold[0], None, TrainConfig(metric="ndcg@10", num_trees=10, learning_rate=0.5))
        assert ens.metric == "ndcg@10"
        assert history.train[-1] > history.train[0]

    def test_undefined_everywhere(self):
        ds = Dataset(["1", "2"], np.arange(8.0).reshape(4, 2), np.array([1, 1, 0, 0]), np.array([0, 2, 4]))
        with pytest.raises(TrainingError):
            train(ds, None, TrainConfig(num_trees=3))

    def test_mauc_binary_warns(self, separable_fold, caplog):
        with caplog.at_level(logging.WARNING, logger="lambdauc"):
            ens, _ = train(separable_fold[0], None, TrainConfig(metric="mauc", num_trees=2))
        assert MAUC_BINARY_WARNING in caplog.text
        assert len(ens) == 2

    def test_label_orientation_lowers_mauc(self, skewed_fold):
        """Grade-ordered pushes move toward grade order, which this skew penalises."""
        train_set, _, test_set = skewed_fold
        ens, _ = train(train_set, None, TrainConfig(metric="mauc", num_trees=40, learning_rate=0.5,
                                                    orientation="label"))
        value = evaluate_metric("mauc", test_set, predict(ens, test_set.features))
        assert value < 0.5
        runs = metrics.dataset_runs(test_set, predict(ens, test_set.features))
        assert metrics.class_reference_aucs(runs, 4).aggregate > 0.8

    def test_mauc_close_to_prevalence_ceiling(self, skewed_fold):
        """Scoring each document by its class prevalence is the best possible ordering.

        For the skewed set that ceiling sits far below 0.65, so the trained
        model is judged by the share of the reachable gain it captures.
        """
        train_set, valid_set, test_set = skewed_fold
        p = train_set.class_proportions
        oracle_scores = np.array([p[y] for y in test_set.labels])
        ceiling = evaluate_metric("mauc", test_set, oracle_scores)
        assert ceiling < 0.6
        ens, _ = train(train_set, valid_set, TrainConfig(metric="mauc", num_trees=60, learning_rate=0.25))
        value = evaluate_metric("mauc", test_set, predict(ens, test_set.features))
        assert value - 0.5 >= 0.6 * (ceiling - 0.5)
