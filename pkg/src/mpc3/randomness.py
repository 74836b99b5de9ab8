"""Correlated randomness from pairwise PRF keys.

Key k_j is generated by party j and handed to party j-1 during setup, so
party i ends up holding (k_i, k_{i+1 mod 3}) -- the same 2-of-3 layout as
the shares themselves.  Everything here is a deterministic function of the
seeds, which is what makes simulator and TCP runs bit-identical.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .shares import ArithShare
from .transport import next_party, prev_party

_BLOCK = 16


def derive_pair_key(seed: int, session_id: int) -> bytes:
    """The pairwise key a party generates and shares with its predecessor."""
    material = b"mpc3-pair" + session_id.to_bytes(8, "little") + seed.to_bytes(8, "little", signed=True)
    return hashlib.sha256(material).digest()[:_BLOCK]


def derive_own_key(seed: int, session_id: int) -> bytes:
    """Private dealer randomness, never shared."""
    material = b"mpc3-own" + session_id.to_bytes(8, "little") + seed.to_bytes(8, "little", signed=True)
    return hashlib.sha256(material).digest()[:_BLOCK]


class Prf:
    """AES-128 in counter mode, consumed as a stream of uint64 words.

    Both holders of a key must draw the same word counts in the same order;
    the counter advances by whole blocks per call.
    """

    def __init__(self, key: bytes):
        if len(key) != _BLOCK:
            raise ValueError("PRF key must be 16 bytes")
        self._key = key
        self.counter = 0

    def words(self, n: int) -> np.ndarray:
        if n == 0:
            self.counter += 0
            return np.zeros(0, dtype=np.uint64)
        blocks = math.ceil(n * 8 / _BLOCK)
        nonce = self.counter.to_bytes(_BLOCK, "big")
        enc = Cipher(algorithms.AES(self._key), modes.CTR(nonce)).encryptor()
        stream = enc.update(b"\0" * (blocks * _BLOCK))
        self.counter += blocks
        return np.frombuffer(stream[: n * 8], dtype="<u8").astype(np.uint64)


@dataclass
class PrfKeySetup:
    """Keys held by one party: k_i (self-generated) and k_{i+1} (received)."""

    party_id: int
    key_self: Prf
    key_next: Prf
    own: Prf

    @classmethod
    def from_keys(cls, party_id: int, seed: int, session_id: int, next_key: bytes):
        return cls(
            party_id=party_id,
            key_self=Prf(derive_pair_key(seed, session_id)),
            key_next=Prf(next_key),
            own=Prf(derive_own_key(seed, session_id)),
        )


def gen_zero_sharing(rng: PrfKeySetup, shape) -> np.ndarray:
    """This party's slice a_i = F(k_i) - F(k_{i+1}); the three slices
    telescope to zero. No communication."""
    n = int(np.prod(shape, dtype=np.int64))
    a = rng.key_self.words(n) - rng.key_next.words(n)
    return a.reshape(shape)


def gen_xor_zero_sharing(rng: PrfKeySetup, shape) -> np.ndarray:
    n = int(np.prod(shape, dtype=np.int64))
    a = rng.key_self.words(n) ^ rng.key_next.words(n)
    return a.reshape(shape)


def gen_shared_random(rng: PrfKeySetup, shape, is_scaled: bool = False) -> ArithShare:
    """Replicated sharing of an unknown uniform value: component x_j = F(k_j).

    Party i can evaluate exactly x_i and x_{i+1}, which is its share pair.
    No communication."""
    n = int(np.prod(shape, dtype=np.int64))
    s0 = rng.key_self.words(n).reshape(shape)
    s1 = rng.key_next.words(n).reshape(shape)
    return ArithShare(s0, s1, is_scaled)


class TruncPairState:
    def __init__(self, shape, frac_bits, local):
        self.shape = shape
        self.frac_bits = frac_bits
        self.local = local  # per-party dict of locally known tensors


def _signed_shift(words: np.ndarray, frac_bits: int) -> np.ndarray:
    return (np.ascontiguousarray(words).view(np.int64) >> frac_bits).view(np.uint64)


def trunc_pair_begin(rng: PrfKeySetup, channels, shape, frac_bits: int) -> TruncPairState:
    """Start producing shares of (r, r >> frac_bits), r uniform 63-bit signed.

    r is sampled from k_1, so parties 0 and 1 know it outright (party 2 must
    not); the PRF components x_0 (k_0) and x_2 (k_2) cover the other two
    additive slots, and parties 0 and 1 swap them to derive the dependent
    component x_1. All sends happen here; recvs in trunc_pair_finish.
    """
    if frac_bits >= 62:
        raise ValueError("frac_bits must leave a guard bit below 63")
    n = int(np.prod(shape, dtype=np.int64))
    me = rng.party_id
    local = {}
    if me == 0:
        r_u = rng.key_next.words(n)  # k_1
        masks = rng.key_self.words(2 * n)  # k_0 -> x_0 for r and r'
        local["r_ring"] = (r_u >> np.uint64(1)) - np.uint64(1 << 62)
        local["x0"] = masks[:n]
        local["x0p"] = masks[n:]
        channels.send_words(1, masks)
    elif me == 1:
        r_u = rng.key_self.words(n)  # k_1
        masks = rng.key_next.words(2 * n)  # k_2 -> x_2 for r and r'
        local["r_ring"] = (r_u >> np.uint64(1)) - np.uint64(1 << 62)
        local["x2"] = masks[:n]
        local["x2p"] = masks[n:]
        channels.send_words(0, masks)
    else:
        masks2 = rng.key_self.words(2 * n)  # k_2
        masks0 = rng.key_next.words(2 * n)  # k_0
        local["x2"] = masks2[:n]
        local["x2p"] = masks2[n:]
        local["x0"] = masks0[:n]
        local["x0p"] = masks0[n:]
    return TruncPairState(shape, frac_bits, local)


def trunc_pair_finish(rng: PrfKeySetup, channels, state: TruncPairState):
    """Complete the exchange; returns (share of r, share of r >> frac_bits)."""
    shape = state.shape
    n = int(np.prod(shape, dtype=np.int64))
    me = rng.party_id
    loc = state.local
    if me == 0:
        peer = channels.recv_words(1, 2 * n)
        x2, x2p = peer[:n], peer[n:]
        rp = _signed_shift(loc["r_ring"], state.frac_bits)
        x1 = loc["r_ring"] - loc["x0"] - x2
        x1p = rp - loc["x0p"] - x2p
        pair0, pair1 = (loc["x0"], x1), (loc["x0p"], x1p)
    elif me == 1:
        peer = channels.recv_words(0, 2 * n)
        x0, x0p = peer[:n], peer[n:]
        rp = _signed_shift(loc["r_ring"], state.frac_bits)
        x1 = loc["r_ring"] - x0 - loc["x2"]
        x1p = rp - x0p - loc["x2p"]
        pair0, pair1 = (x1, loc["x2"]), (x1p, loc["x2p"])
    else:
        pair0, pair1 = (loc["x2"], loc["x0"]), (loc["x2p"], loc["x0p"])
    r = ArithShare(pair0[0].reshape(shape), pair0[1].reshape(shape), False)
    r_shifted = ArithShare(pair1[0].reshape(shape), pair1[1].reshape(shape), False)
    return r, r_shifted


def gen_trunc_pair(rng: PrfKeySetup, channels, shape, frac_bits: int):
    """Standalone truncation pair: one communication round."""
    state = trunc_pair_begin(rng, channels, shape, frac_bits)
    result = trunc_pair_finish(rng, channels, state)
    channels.barrier_round()
    return result
