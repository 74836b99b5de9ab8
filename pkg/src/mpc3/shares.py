"""Per-party views of replicated sharings.

Party i stores the pair (x_i, x_{i+1 mod 3}); across the three parties the
components sum (arithmetic) or XOR (boolean) to the secret.  Components are
raw uint64 arrays; RingTensor appears only at the plaintext boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ArithShare:
    """Additive replicated sharing: x_0 + x_1 + x_2 = secret mod 2^64."""

    s0: np.ndarray
    s1: np.ndarray
    is_scaled: bool = False

    def __post_init__(self):
        if self.s0.shape != self.s1.shape:
            raise ValueError("share components must have equal shapes")

    @property
    def shape(self):
        return self.s0.shape

    @property
    def size(self):
        return self.s0.size

    def map(self, fn, is_scaled=None) -> "ArithShare":
        """Apply the same local transform to both components."""
        scaled = self.is_scaled if is_scaled is None else is_scaled
        return ArithShare(fn(self.s0), fn(self.s1), scaled)


@dataclass
class BoolShare:
    """XOR replicated sharing: x_0 ^ x_1 ^ x_2 = secret."""

    s0: np.ndarray
    s1: np.ndarray
    bit_width: int = 64

    def __post_init__(self):
        if self.s0.shape != self.s1.shape:
            raise ValueError("share components must have equal shapes")
        if self.bit_width not in (1, 64):
            raise ValueError("bit_width must be 1 or 64")

    @property
    def shape(self):
        return self.s0.shape

    @property
    def size(self):
        return self.s0.size

    def map(self, fn, bit_width=None) -> "BoolShare":
        width = self.bit_width if bit_width is None else bit_width
        return BoolShare(fn(self.s0), fn(self.s1), width)
