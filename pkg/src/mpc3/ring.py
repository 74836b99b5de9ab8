"""Wrapping arithmetic over Z_2^64 and fixed-point encoding.

Every value in the protocol stack is a 64-bit word interpreted modulo 2^64,
with two's complement giving the signed reading.  Tensors are dense,
row-major numpy arrays of dtype uint64; all arithmetic wraps silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingOverflowError

WORD_BITS = 64
MODULUS = 1 << 64
_U64 = np.uint64


def to_words(values) -> np.ndarray:
    """Coerce python ints / arrays to a uint64 array (mod 2^64)."""
    arr = np.asarray(values)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype == object or arr.dtype.kind not in "iu":
        # Python ints possibly outside int64 range; reduce explicitly.
        flat = [int(v) % MODULUS for v in arr.reshape(-1)]
        return np.array(flat, dtype=_U64).reshape(arr.shape)
    return arr.astype(np.int64).view(_U64) if arr.dtype.kind == "i" else arr.astype(_U64)


def signed(words: np.ndarray) -> np.ndarray:
    """Two's-complement reading of uint64 words, as int64."""
    return np.ascontiguousarray(words).view(np.int64)


class FixedPointCodec:
    """Scales reals by 2^frac_bits into the ring; frac_bits in [8, 24]."""

    def __init__(self, frac_bits: int = 16):
        if not 8 <= frac_bits <= 24:
            raise ValueError(f"frac_bits must be in [8, 24], got {frac_bits}")
        self.frac_bits = frac_bits
        self.total_bits = WORD_BITS
        self.scale = 1 << frac_bits

    def encode(self, v: float) -> int:
        """round(v * 2^frac_bits) mod 2^64."""
        limit = 1 << (63 - self.frac_bits)
        if abs(v) >= limit:
            raise EncodingOverflowError(f"|{v}| >= 2^{63 - self.frac_bits}")
        w = round(v * self.scale)
        return w % MODULUS

    def decode(self, word: int) -> float:
        w = int(word) % MODULUS
        if w >= MODULUS // 2:
            w -= MODULUS
        return w / self.scale

    def encode_tensor(self, values, scaled: bool = True) -> "RingTensor":
        arr = np.asarray(values, dtype=np.float64)
        limit = 1 << (63 - self.frac_bits)
        if arr.size and np.max(np.abs(arr)) >= limit:
            raise EncodingOverflowError("tensor magnitude out of fixed-point range")
        factor = self.scale if scaled else 1
        words = np.rint(arr * factor).astype(np.int64).view(_U64)
        return RingTensor(words, is_scaled=scaled)

    def decode_tensor(self, t: "RingTensor", double_scaled: bool = False) -> np.ndarray:
        factor = self.scale * self.scale if double_scaled else self.scale
        if not t.is_scaled and not double_scaled:
            factor = 1
        return signed(t.data).astype(np.float64) / factor


@dataclass
class RingTensor:
    """Dense tensor of ring words; is_scaled marks a 2^frac_bits factor."""

    data: np.ndarray
    is_scaled: bool = False

    def __post_init__(self):
        self.data = to_words(self.data)

    @property
    def shape(self):
        return self.data.shape

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, RingTensor):
            other = other.data
        return to_words(other)

    def _check_shapes(self, other: np.ndarray):
        if other.shape != self.shape and other.size != 1 and self.data.size != 1:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other) -> "RingTensor":
        o = self._coerce(other)
        self._check_shapes(o)
        return RingTensor(self.data + o, self.is_scaled)

    def __sub__(self, other) -> "RingTensor":
        o = self._coerce(other)
        self._check_shapes(o)
        return RingTensor(self.data - o, self.is_scaled)

    def __mul__(self, other) -> "RingTensor":
        o = self._coerce(other)
        self._check_shapes(o)
        scaled = self.is_scaled or (isinstance(other, RingTensor) and other.is_scaled)
        return RingTensor(self.data * o, scaled)

    def __neg__(self) -> "RingTensor":
        return RingTensor(-self.data, self.is_scaled)

    def matmul(self, other) -> "RingTensor":
        o = self._coerce(other)
        if self.data.ndim != 2 or o.ndim != 2:
            raise ValueError("matmul requires 2-D tensors")
        if self.shape[1] != o.shape[0]:
            raise ValueError(f"inner dimensions disagree: {self.shape} x {o.shape}")
        scaled = self.is_scaled or (isinstance(other, RingTensor) and other.is_scaled)
        return RingTensor(self.data @ o, scaled)

    def __matmul__(self, other) -> "RingTensor":
        return self.matmul(other)

    def reshape(self, shape) -> "RingTensor":
        return RingTensor(self.data.reshape(shape), self.is_scaled)

    def __eq__(self, other):
        if isinstance(other, RingTensor):
            return np.array_equal(self.data, other.data)
        return NotImplemented


def zeros(shape, scaled: bool = False) -> RingTensor:
    return RingTensor(np.zeros(shape, dtype=_U64), is_scaled=scaled)
