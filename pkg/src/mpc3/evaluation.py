"""Dataset handling, metrics, cross-validation, and the plaintext oracle.

The oracle trainer reuses the exact public schedule (init, batch order,
learning rate, class weights) of the secure trainer but runs in float64
with the same piecewise sigmoid, so the two trajectories differ only by
accumulated fixed-point truncation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from .errors import DegenerateClassError
from .piecewise import sigmoid_spec
from .trainer import (
    TrainConfig,
    batch_indices,
    class_weights_from_counts,
    initial_weights,
    learning_rate,
    train,
)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise ValueError("X must be N x f with one label per row")

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]


def standardize(X: np.ndarray) -> np.ndarray:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    return (X - mean) / std


def load_csv(path, has_header: bool = True, label_column="last",
             standardize_features: bool = True) -> Dataset:
    df = pd.read_csv(path, header=0 if has_header else None)
    if df.isna().any().any():
        raise ValueError(f"{path}: missing values are not supported")
    if label_column == "last":
        label_col = df.columns[-1]
    else:
        if not has_header:
            raise ValueError("label column by name requires a header row")
        if label_column not in df.columns:
            raise ValueError(f"label column {label_column!r} not found")
        label_col = label_column
    y_raw = df[label_col].to_numpy()
    y = np.asarray(y_raw, dtype=np.float64)
    if not np.all(np.isin(y, (0.0, 1.0))):
        bad = sorted(set(y_raw) - {0, 1, 0.0, 1.0})
        raise ValueError(f"labels must be 0/1; found {bad[:5]}")
    features = df.drop(columns=[label_col])
    X = features.to_numpy(dtype=np.float64)
    if standardize_features:
        X = standardize(X)
    return Dataset(X=X, y=y.astype(np.int64), feature_names=[str(c) for c in features.columns])


def select_columns(dataset: Dataset, names) -> Dataset:
    """Keep the named feature columns in the given order; unknown names are
    skipped with a warning, duplicates collapse to the first occurrence."""
    if dataset.feature_names is None:
        raise ValueError("dataset has no feature names")
    seen, ordered = set(), []
    for name in names:
        if name in seen:
            continue
        seen.add(name)
        ordered.append(name)
    if not ordered:
        raise ValueError("no column names given")
    lookup = {n: i for i, n in enumerate(dataset.feature_names)}
    keep = []
    for name in ordered:
        if name in lookup:
            keep.append(lookup[name])
        else:
            warnings.warn(f"column {name!r} not present; skipping")
    if not keep:
        raise ValueError("none of the requested columns exist")
    return Dataset(
        X=dataset.X[:, keep],
        y=dataset.y,
        feature_names=[dataset.feature_names[i] for i in keep],
    )


@dataclass
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def balanced_accuracy(self) -> float:
        return 0.5 * (self.tp / (self.tp + self.fn) + self.tn / (self.fp + self.tn))

    @property
    def minority_recall(self) -> float:
        """Recall of the smaller class."""
        if self.tp + self.fn <= self.tn + self.fp:
            return self.tp / (self.tp + self.fn)
        return self.tn / (self.fp + self.tn)

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "balanced_accuracy": self.balanced_accuracy,
        }


def confusion(preds, labels) -> MetricsReport:
    preds = np.asarray(preds).astype(np.int64).ravel()
    labels = np.asarray(labels).astype(np.int64).ravel()
    if preds.shape != labels.shape:
        raise ValueError("prediction/label length mismatch")
    if not (np.any(labels == 0) and np.any(labels == 1)):
        raise DegenerateClassError("both classes must appear in the labels")
    return MetricsReport(
        tp=int(np.sum((preds == 1) & (labels == 1))),
        fp=int(np.sum((preds == 1) & (labels == 0))),
        tn=int(np.sum((preds == 0) & (labels == 0))),
        fn=int(np.sum((preds == 0) & (labels == 1))),
    )


def balanced_accuracy(preds, labels) -> MetricsReport:
    return confusion(preds, labels)


def predict(X: np.ndarray, w: np.ndarray, kind) -> np.ndarray:
    """Threshold the approximate sigmoid at 0.5."""
    scores = sigmoid_spec(kind).reference(X @ w.reshape(-1, 1)).ravel()
    return (scores >= 0.5).astype(np.int64)


# -- plaintext oracle ------------------------------------------------------


def plaintext_train(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Reference trainer in exact real arithmetic; same approximate sigmoid,
    schedule, init and batch order as the secure trainer."""
    X = np.asarray(X, dtype=np.float64)
    y_col = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    n, f = X.shape
    w = initial_weights(f, cfg.seed)
    spec = sigmoid_spec(cfg.sigmoid_kind)
    if cfg.class_weighting:
        cw = class_weights_from_counts(n, int(y_col.sum()))
    else:
        cw = class_weights_from_counts(2, 1)  # neutral weights 1.0 / 1.0
    for t, idx in enumerate(batch_indices(n, cfg.iterations, cfg.batch_size, cfg.seed)):
        xb, yb = X[idx], y_col[idx]
        err = spec.reference(xb @ w) - yb
        if cfg.class_weighting:
            err = err * ((cw.c1 - cw.c0) * yb + cw.c0)
        grad = xb.T @ err
        eta = learning_rate(t, cfg)
        update = (eta / xb.shape[0]) * grad
        if cfg.l2:
            update = update + (eta * cfg.lam / n) * w
        w = w - update
    return w


# -- secure training drivers ----------------------------------------------


def train_in_simulator(X, y, cfg: TrainConfig, *, seeds=(1, 2, 3), session_id=0,
                       assert_mode=False):
    """Dealer-mode training run: party 0 shares the dataset, all parties
    train, weights are revealed to all.  Returns (weights, per-party stats)."""
    from .simulator import simulate  # local import to avoid a cycle

    X = np.asarray(X, dtype=np.float64)
    y_col = np.asarray(y, dtype=np.float64).reshape(-1, 1)

    def program(prot):
        xs, ys = prot.share_many([
            (0, X if prot.me == 0 else None, X.shape, True),
            (0, y_col if prot.me == 0 else None, y_col.shape, True),
        ])
        state = train(prot, xs, ys, cfg)
        return prot.reveal(state.w)

    result = simulate(program, seeds=seeds, session_id=session_id,
                      frac_bits=cfg.frac_bits, assert_mode=assert_mode)
    from .ring import FixedPointCodec

    weights = FixedPointCodec(cfg.frac_bits).decode_tensor(result.outputs[0])
    return weights, result.stats


def stratified_folds(y: np.ndarray, k: int, seed: int = 0) -> list:
    """k stratified (train_idx, test_idx) splits, deterministic under seed."""
    y = np.asarray(y).ravel()
    if k > y.size:
        raise ValueError(f"k={k} exceeds sample count {y.size}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        assignment[idx] = np.arange(idx.size) % k
    folds = []
    for fold in range(k):
        test = np.flatnonzero(assignment == fold)
        train_idx = np.flatnonzero(assignment != fold)
        folds.append((train_idx, test))
    return folds


def kfold_cv(dataset: Dataset, cfg: TrainConfig, k: int = 10, seed: int = 0,
             backend: str = "simulator") -> dict:
    """k-fold cross-validated balanced accuracy.

    Each fold trains from a fold-indexed seed; evaluation happens in
    plaintext on the held-out rows after revealing the fold's weights.
    """
    scores = []
    for fold, (train_idx, test_idx) in enumerate(stratified_folds(dataset.y, k, seed)):
        y_test = dataset.y[test_idx]
        if not (np.any(y_test == 0) and np.any(y_test == 1)):
            raise DegenerateClassError(f"fold {fold} holds a single class; lower k")
        fold_cfg = replace(cfg, seed=cfg.seed + fold)
        if backend == "simulator":
            w, _ = train_in_simulator(dataset.X[train_idx], dataset.y[train_idx], fold_cfg)
        elif backend == "plaintext":
            w = plaintext_train(dataset.X[train_idx], dataset.y[train_idx], fold_cfg)
        else:
            raise ValueError(f"unknown backend {backend!r}")
        preds = predict(dataset.X[test_idx], w, fold_cfg.sigmoid_kind)
        scores.append(confusion(preds, y_test).balanced_accuracy)
    scores = np.asarray(scores)
    return {
        "k": k,
        "fold_scores": scores.tolist(),
        "mean_balanced_accuracy": float(scores.mean()),
        "std_balanced_accuracy": float(scores.std()),
    }
