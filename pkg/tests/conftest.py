"""Shared helpers: consistent per-party RNG setups, boolean share plumbing
for tests, and the synthetic dataset generators."""

from __future__ import annotations

import numpy as np
import pytest

from mpc3.evaluation import Dataset, standardize
from mpc3.randomness import Prf, PrfKeySetup, derive_own_key, derive_pair_key
from mpc3.shares import BoolShare
from mpc3.transport import next_party, prev_party


def three_rngs(seeds=(1, 2, 3), session_id=0):
    """PrfKeySetups as they would exist after a real handshake."""
    keys = [derive_pair_key(seeds[i], session_id) for i in range(3)]
    return [
        PrfKeySetup(
            party_id=i,
            key_self=Prf(keys[i]),
            key_next=Prf(keys[(i + 1) % 3]),
            own=Prf(derive_own_key(seeds[i], session_id)),
        )
        for i in range(3)
    ]


def bool_share_of(prot, words, bit_width=64, seed=123):
    """Deterministic boolean sharing of publicly known test words.

    Every party derives the same components from the seed, then keeps its
    own pair -- only usable in tests where the value is not actually secret.
    """
    words = np.asarray(words, dtype=np.uint64)
    rng = np.random.default_rng(seed)
    mask = 1 if bit_width == 1 else 0xFFFFFFFFFFFFFFFF
    c0 = rng.integers(0, 1 << 63, size=words.shape, dtype=np.uint64) & np.uint64(mask)
    c1 = rng.integers(0, 1 << 63, size=words.shape, dtype=np.uint64) & np.uint64(mask)
    comps = [c0, c1, words ^ c0 ^ c1]
    me = prot.me
    return BoolShare(comps[me].copy(), comps[(me + 1) % 3].copy(), bit_width)


def open_bool(prot, b: BoolShare) -> np.ndarray:
    """Reconstruct a boolean sharing across the three parties (test only)."""
    ch, me = prot.session.channels, prot.me
    ch.send_words(next_party(me), b.s0.ravel())
    third = ch.recv_words(prev_party(me), b.size).reshape(b.shape)
    prot.barrier()
    return b.s0 ^ b.s1 ^ third


# -- synthetic datasets ----------------------------------------------------


def study_like(seed=1, n=225, f=67, n_pos=142, noise=0.2) -> Dataset:
    """Imbalanced, noisy linear problem shaped like a small expression study:
    225 samples, 67 features, ~63:37 split, label noise limiting accuracy."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(f, 1)) * (rng.uniform(size=(f, 1)) < 0.3)
    X = rng.normal(size=(n, f))
    s = (X @ w).ravel()
    q = (n_pos / n - noise) / (1 - 2 * noise)  # pre-flip positive rate
    y = (s > np.quantile(s, 1 - q)).astype(np.int64)
    flip = rng.uniform(size=n) < noise
    y = np.where(flip, 1 - y, y)
    return Dataset(standardize(X), y, [f"g{i}" for i in range(f)])


def imbalanced_desk(seed, n=500, f=20, frac_pos=0.1):
    """9:1 data where the minority class sits on a shifted Gaussian."""
    rng = np.random.default_rng(seed)
    n_pos = int(n * frac_pos)
    mu = rng.normal(size=f)
    mu *= 1.2 / np.linalg.norm(mu)
    X = rng.normal(size=(n, f))
    y = np.zeros(n, dtype=np.int64)
    y[:n_pos] = 1
    X[:n_pos] += mu
    p = rng.permutation(n)
    return X[p], y[p]


def separable(seed=0, n=60, f=8, margin=4.0):
    """Two well-separated clusters: a model should reach 100%."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, f))
    y = (np.arange(n) % 2).astype(np.int64)
    X[y == 1, 0] += margin
    X[y == 0, 0] -= margin
    return Dataset(standardize(X), y, [f"c{i}" for i in range(f)])


@pytest.fixture
def toy_csv(tmp_path):
    """Small labeled CSV with a header row."""
    rng = np.random.default_rng(3)
    n, f = 40, 5
    w = rng.normal(size=(f, 1))
    X = rng.normal(size=(n, f))
    y = ((X @ w).ravel() > 0).astype(int)
    path = tmp_path / "toy.csv"
    lines = [",".join([f"g{i}" for i in range(f)] + ["label"])]
    for i in range(n):
        lines.append(",".join(f"{v:.4f}" for v in X[i]) + f",{y[i]}")
    path.write_text("\n".join(lines) + "\n")
    return path
