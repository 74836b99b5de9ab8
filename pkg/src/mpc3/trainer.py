"""Class-weighted logistic regression on secret-shared data.

One SGD step: forward product, piecewise sigmoid, error times per-sample
class weight, transposed-product gradient, and an update folded into a
single public linear combination (learning rate, batch normalization and
L2 decay share one truncation).  The class weights come from the revealed
class totals -- the only values the training loop ever opens.

Batch order, weight initialization and the learning-rate schedule are
public and seeded, so a plaintext reference run can reproduce the exact
same trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateClassError
from .piecewise import SigmoidKind, sigmoid
from .protocol import Protocol
from .shares import ArithShare


@dataclass
class TrainConfig:
    iterations: int = 100
    batch_size: int = 32
    frac_bits: int = 16
    sigmoid_kind: SigmoidKind = SigmoidKind.FIVE_PIECE
    eta0: float = 1.0 / 1.2
    lam: float = 1.0  # schedule decay factor and L2 penalty weight
    l2: bool = True
    class_weighting: bool = True
    seed: int = 0

    def __post_init__(self):
        self.sigmoid_kind = SigmoidKind.parse(self.sigmoid_kind)
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as f:
            raw = json.load(f)
        return cls(**raw)

    def as_dict(self) -> dict:
        d = self.__dict__.copy()
        d["sigmoid_kind"] = self.sigmoid_kind.value
        return d


@dataclass
class ClassWeights:
    c0: float
    c1: float


@dataclass
class ModelState:
    w: ArithShare
    t: int = 0


def learning_rate(t: int, cfg: TrainConfig) -> float:
    """eta_0 / (1 + lam * eta_0 * t); the defaults give 1 / (1.2 + t)."""
    return cfg.eta0 / (1.0 + cfg.lam * cfg.eta0 * t)


def initial_weights(n_features: int, seed: int) -> np.ndarray:
    """Public seeded init, uniform in [-0.01, 0.01]."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.01, 0.01, size=(n_features, 1))


def batch_indices(n_samples: int, iterations: int, batch_size: int, seed: int) -> list:
    """Cyclic mini-batches over one seeded public permutation."""
    if batch_size > n_samples:
        raise ValueError(f"batch_size {batch_size} exceeds dataset size {n_samples}")
    perm = np.random.default_rng(seed).permutation(n_samples)
    out = []
    pos = 0
    for _ in range(iterations):
        idx = np.arange(pos, pos + batch_size) % n_samples
        out.append(perm[idx])
        pos = (pos + batch_size) % n_samples
    return out


def class_weights_from_counts(n_total: int, n_positive: int) -> ClassWeights:
    n0 = n_total - n_positive
    if n_positive == 0 or n0 == 0:
        raise DegenerateClassError(
            f"labels contain {n_positive} positives out of {n_total}; both classes required"
        )
    return ClassWeights(c0=n_total / (2.0 * n0), c1=n_total / (2.0 * n_positive))


def compute_class_weights(prot: Protocol, labels: ArithShare) -> ClassWeights:
    """Reveal only the class totals (declared leakage: two integers)."""
    total = prot.sum(prot.reshape(labels, (-1,)), axis=0)
    opened = prot.reveal(total)
    n_positive = int(round(prot.codec.decode(int(opened.data))))
    n_total = labels.size
    return class_weights_from_counts(n_total, n_positive)


def select_weight(prot: Protocol, y: ArithShare, cw: ClassWeights) -> ArithShare:
    """Oblivious per-sample weight: (C1 - C0) * y + C0."""
    scaled = prot.mul_public(y, float(cw.c1 - cw.c0))
    return prot.add(scaled, np.full(y.shape, cw.c0))


def train_step(prot: Protocol, x_batch: ArithShare, y_batch: ArithShare,
               state: ModelState, cfg: TrainConfig, cw: ClassWeights,
               n_total: int) -> ModelState:
    logits = prot.matmul(x_batch, state.w)
    y_hat = sigmoid(prot, logits, cfg.sigmoid_kind)
    err = prot.sub(y_hat, y_batch)
    if cfg.class_weighting:
        err = prot.mul(err, select_weight(prot, y_batch, cw))
    grad = prot.matmul(prot.transpose(x_batch), err)

    eta = learning_rate(state.t, cfg)
    batch = x_batch.shape[0]
    terms = [(eta / batch, grad)]
    if cfg.l2:
        terms.append((eta * cfg.lam / n_total, state.w))
    update = prot.lincomb(terms)
    return ModelState(w=prot.sub(state.w, update), t=state.t + 1)


def train(prot: Protocol, x: ArithShare, y: ArithShare, cfg: TrainConfig) -> ModelState:
    """Full training loop on shared data; returns the final shared weights.

    Communication statistics accumulate on prot.stats as usual.
    """
    n, f = x.shape
    if y.shape != (n, 1):
        raise ValueError(f"labels must be shaped ({n}, 1), got {y.shape}")
    state = ModelState(w=prot.share_public(initial_weights(f, cfg.seed)), t=0)
    cw = compute_class_weights(prot, y) if cfg.class_weighting else ClassWeights(1.0, 1.0)
    for idx in batch_indices(n, cfg.iterations, cfg.batch_size, cfg.seed):
        x_b = prot.take_rows(x, idx)
        y_b = prot.take_rows(y, idx)
        state = train_step(prot, x_b, y_b, state, cfg, cw, n_total=n)
    return state
