import numpy as np
import pytest

from mpc3.errors import DegenerateClassError
from mpc3.evaluation import (
    Dataset,
    balanced_accuracy,
    kfold_cv,
    load_csv,
    plaintext_train,
    predict,
    select_columns,
    standardize,
    stratified_folds,
)
from mpc3.trainer import TrainConfig

from conftest import separable


class TestLoadCsv:
    def test_happy_path(self, toy_csv):
        ds = load_csv(toy_csv)
        assert ds.X.shape == (40, 5)
        assert ds.y.shape == (40,)
        assert ds.feature_names == [f"g{i}" for i in range(5)]
        np.testing.assert_allclose(ds.X.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(ds.X.std(axis=0), 1.0, atol=1e-9)

    def test_no_standardize(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n10,1,0\n20,2,1\n30,3,0\n")
        ds = load_csv(p, standardize_features=False)
        np.testing.assert_array_equal(ds.X[:, 0], [10, 20, 30])

    def test_label_by_name(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("y,a,b\n0,1,2\n1,3,4\n")
        ds = load_csv(p, label_column="y")
        np.testing.assert_array_equal(ds.y, [0, 1])
        assert ds.feature_names == ["a", "b"]

    def test_no_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,0\n3,4,1\n")
        ds = load_csv(p, has_header=False)
        assert ds.X.shape == (2, 2)
        with pytest.raises(ValueError, match="header"):
            load_csv(p, has_header=False, label_column="y")

    def test_non_binary_label(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,label\n1,2\n2,0\n")
        with pytest.raises(ValueError, match="labels"):
            load_csv(p)

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,,0\n2,3,1\n")
        with pytest.raises(ValueError, match="missing"):
            load_csv(p)

    def test_missing_label_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,label\n1,0\n2,1\n")
        with pytest.raises(ValueError, match="not found"):
            load_csv(p, label_column="nope")

    def test_zero_variance_column_survives(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        out = standardize(X)
        assert np.all(np.isfinite(out))
        np.testing.assert_array_equal(out[:, 1], 0.0)


class TestSelectColumns:
    def _ds(self):
        return Dataset(np.arange(12, dtype=float).reshape(3, 4),
                       np.array([0, 1, 0]), ["a", "b", "c", "d"])

    def test_subset_in_file_order(self):
        out = select_columns(self._ds(), ["c", "a"])
        assert out.feature_names == ["c", "a"]
        np.testing.assert_array_equal(out.X[:, 0], self._ds().X[:, 2])

    def test_missing_names_warn(self):
        with pytest.warns(UserWarning, match="zz"):
            out = select_columns(self._ds(), ["a", "zz", "b"])
        assert out.feature_names == ["a", "b"]

    def test_duplicates_deduplicated(self):
        out = select_columns(self._ds(), ["b", "b", "a"])
        assert out.feature_names == ["b", "a"]

    def test_empty_requests_error(self):
        with pytest.raises(ValueError, match="no column names"):
            select_columns(self._ds(), [])
        with pytest.warns(UserWarning):
            with pytest.raises(ValueError, match="none of the requested"):
                select_columns(self._ds(), ["zz"])


class TestMetrics:
    def test_formula_example(self):
        """TP=9 FN=1 TN=4 FP=4 -> (0.9 + 0.5)/2 = 0.7."""
        preds = np.r_[np.ones(9), np.zeros(1), np.zeros(4), np.ones(4)]
        labels = np.r_[np.ones(10), np.zeros(8)]
        rep = balanced_accuracy(preds, labels)
        assert (rep.tp, rep.fn, rep.tn, rep.fp) == (9, 1, 4, 4)
        assert rep.balanced_accuracy == pytest.approx(0.7)

    def test_perfect(self):
        labels = np.array([0, 1, 1, 0])
        assert balanced_accuracy(labels, labels).balanced_accuracy == 1.0

    def test_majority_predictor_scores_half(self):
        labels = np.r_[np.ones(9), np.zeros(1)]
        rep = balanced_accuracy(np.ones(10), labels)
        assert rep.balanced_accuracy == 0.5

    def test_absent_class_errors(self):
        with pytest.raises(DegenerateClassError):
            balanced_accuracy(np.ones(4), np.ones(4))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            balanced_accuracy(np.ones(3), np.ones(4))

    def test_minority_recall(self):
        labels = np.r_[np.ones(2), np.zeros(8)]
        preds = np.r_[np.ones(1), np.zeros(9)]
        assert balanced_accuracy(preds, labels).minority_recall == 0.5


class TestFolds:
    def test_stratified_ratio_within_one(self):
        y = np.r_[np.ones(63), np.zeros(37)].astype(int)
        for train_idx, test_idx in stratified_folds(y, 10, seed=1):
            assert 5 <= y[test_idx].sum() <= 7  # 6.3 +/- 1
            assert len(train_idx) + len(test_idx) == 100
            assert not set(train_idx) & set(test_idx)

    def test_deterministic(self):
        y = np.random.default_rng(0).integers(0, 2, size=30)
        a = stratified_folds(y, 5, seed=4)
        b = stratified_folds(y, 5, seed=4)
        for (ta, sa), (tb, sb) in zip(a, b):
            np.testing.assert_array_equal(ta, tb)
            np.testing.assert_array_equal(sa, sb)

    def test_k_exceeds_n(self):
        with pytest.raises(ValueError):
            stratified_folds(np.array([0, 1]), 3)


class TestKfold:
    def test_deterministic_runs_agree_exactly(self):
        ds = separable()
        cfg = TrainConfig(iterations=10, batch_size=8)
        a = kfold_cv(ds, cfg, k=3, seed=1, backend="plaintext")
        b = kfold_cv(ds, cfg, k=3, seed=1, backend="plaintext")
        assert a == b

    def test_leave_one_out_style(self):
        """k equal to the per-class minimum still runs."""
        ds = separable(n=10)
        res = kfold_cv(ds, TrainConfig(iterations=5, batch_size=4), k=5,
                       backend="plaintext")
        assert len(res["fold_scores"]) == 5

    def test_unknown_backend(self):
        with pytest.raises(ValueError, match="backend"):
            kfold_cv(separable(), TrainConfig(iterations=1, batch_size=4),
                     k=2, backend="quantum")

    def test_degenerate_fold_detected(self):
        ds = Dataset(np.random.default_rng(0).normal(size=(10, 2)),
                     np.r_[np.ones(1), np.zeros(9)].astype(int))
        with pytest.raises(DegenerateClassError):
            kfold_cv(ds, TrainConfig(iterations=1, batch_size=2), k=5,
                     backend="plaintext")


class TestOracle:
    def test_oracle_with_true_sigmoid_gap(self):
        """The approximate sigmoid costs little accuracy on easy data."""
        ds = separable(n=80)
        cfg = TrainConfig(iterations=40, batch_size=16)
        w = plaintext_train(ds.X, ds.y, cfg)
        preds = predict(ds.X, w, cfg.sigmoid_kind)
        assert balanced_accuracy(preds, ds.y).balanced_accuracy == 1.0

    def test_dataset_validation(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(4))
