"""Boolean replicated sharing and the comparison toolkit.

AND mirrors the arithmetic multiplication rule with XOR in place of
addition.  Arithmetic-to-boolean conversion splits the three additive
components into communication-free boolean sharings, compresses them with
one carry-save layer, and finishes with a Kogge-Stone parallel-prefix
addition (6 AND levels for 64 bits).  The sign bit of that sum gives MSB
extraction and, through subtraction of a public threshold, comparison.

Everything operates bit-parallel on uint64 words, so a stacked tensor of
independent comparisons costs exactly the rounds of a single one.
"""

from __future__ import annotations

import numpy as np

from . import randomness
from .shares import ArithShare, BoolShare
from .transport import next_party, prev_party

_ONE = np.uint64(1)
_ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


class BoolOps:
    """Mixin over Protocol: expects self.session and self.codec."""

    # -- local ops --------------------------------------------------------

    def xor(self, x: BoolShare, y: BoolShare) -> BoolShare:
        if x.bit_width != y.bit_width:
            raise ValueError("bit width mismatch in xor")
        return BoolShare(x.s0 ^ y.s0, x.s1 ^ y.s1, x.bit_width)

    def xor_public(self, x: BoolShare, words) -> BoolShare:
        w = np.asarray(words, dtype=np.uint64)
        s0 = x.s0 ^ w if self.me == 0 else x.s0.copy()
        s1 = x.s1 ^ w if self.me == 2 else x.s1.copy()
        return BoolShare(s0, s1, x.bit_width)

    def not_(self, x: BoolShare) -> BoolShare:
        mask = _ONE if x.bit_width == 1 else _ALL_ONES
        return self.xor_public(x, mask)

    def lshift(self, x: BoolShare, k: int) -> BoolShare:
        return x.map(lambda a: a << np.uint64(k))

    def extract_bit(self, x: BoolShare, k: int) -> BoolShare:
        """Public bit position k of a 64-bit sharing, as a 1-bit sharing."""
        if x.bit_width != 64:
            raise ValueError("extract_bit expects a 64-bit sharing")
        return x.map(lambda a: (a >> np.uint64(k)) & _ONE, bit_width=1)

    # -- AND --------------------------------------------------------------

    def and_(self, x: BoolShare, y: BoolShare) -> BoolShare:
        return self.and_many([(x, y)])[0]

    def and_many(self, pairs) -> list:
        ch, me = self.session.channels, self.me
        locals_ = []
        for x, y in pairs:
            if x.bit_width != y.bit_width:
                raise ValueError("bit width mismatch in and")
            z_local = (x.s0 & y.s0) ^ (x.s0 & y.s1) ^ (x.s1 & y.s0)
            z_local = z_local ^ randomness.gen_xor_zero_sharing(self.session.rng, z_local.shape)
            if x.bit_width == 1:
                z_local = z_local & _ONE
            ch.send_words(prev_party(me), z_local.ravel())
            locals_.append((z_local, x.bit_width))
        out = []
        for z_local, width in locals_:
            z_next = ch.recv_words(next_party(me), z_local.size).reshape(z_local.shape)
            out.append(BoolShare(z_local, z_next, width))
        self.barrier()
        for z in out:
            self._record("bool", z)
        return out

    # -- adder and conversions -------------------------------------------

    def add_bool(self, a: BoolShare, b: BoolShare) -> BoolShare:
        """Binary addition of two 64-bit sharings via Kogge-Stone prefix
        carries: 1 + log2(64) AND rounds."""
        g = self.and_(a, b)
        p = self.xor(a, b)
        base = p
        for level, span in enumerate((1, 2, 4, 8, 16, 32)):
            g_shift = self.lshift(g, span)
            p_shift = self.lshift(p, span)
            if level < 5:
                t_g, t_p = self.and_many([(p, g_shift), (p, p_shift)])
                p = t_p
            else:
                t_g = self.and_(p, g_shift)  # last level: propagate unused
            g = self.xor(g, t_g)
        carries = self.lshift(g, 1)
        return self.xor(base, carries)

    def _component_sharing(self, x: ArithShare, j: int) -> BoolShare:
        """Boolean sharing whose component j equals additive component x_j.

        Component j is exactly the slot co-held by the two parties that know
        x_j, so no communication is needed and the third party sees zeros.
        """
        zero = np.zeros_like(x.s0)
        if self.me == j:
            return BoolShare(x.s0.copy(), zero, 64)
        if next_party(self.me) == j:
            return BoolShare(zero, x.s1.copy(), 64)
        return BoolShare(zero, zero.copy(), 64)

    def a2b(self, x: ArithShare) -> BoolShare:
        """Convert an additive sharing to a boolean sharing of the same words.

        x_0 + x_1 + x_2 is evaluated inside the boolean domain: a carry-save
        layer (one batched AND round) reduces the three addends to two, and
        one Kogge-Stone addition finishes the job.
        """
        a = self._component_sharing(x, 0)
        b = self._component_sharing(x, 1)
        c = self._component_sharing(x, 2)
        s = self.xor(self.xor(a, b), c)
        ab, bc, ca = self.and_many([(a, b), (b, c), (c, a)])
        carry = self.xor(self.xor(ab, bc), ca)
        t = self.lshift(carry, 1)
        out = self.add_bool(s, t)
        self._record("bool", out)
        return out

    def msb(self, x: ArithShare) -> BoolShare:
        """Sign bit of the two's-complement value, as a 1-bit sharing."""
        return self.extract_bit(self.a2b(x), 63)

    def lt_const(self, x: ArithShare, threshold: float) -> BoolShare:
        """[decode(x) < threshold] for a public threshold; strict comparison,
        so the boundary value lands in the upper segment."""
        return self.msb(self.sub(x, float(threshold)))

    def lt_consts(self, x: ArithShare, thresholds) -> BoolShare:
        """All comparisons against a list of thresholds in one batch.

        Returns a 1-bit sharing of shape (len(thresholds),) + x.shape; the
        stacked tensor rides through a single MSB evaluation, so rounds do
        not grow with the number of thresholds.
        """
        n = len(thresholds)
        enc = np.array([self.codec.encode(t) for t in thresholds], dtype=np.uint64)
        enc = enc.reshape((n,) + (1,) * x.s0.ndim)
        full = (n,) + x.shape
        s0 = np.ascontiguousarray(np.broadcast_to(x.s0[None, ...], full))
        s1 = np.ascontiguousarray(np.broadcast_to(x.s1[None, ...], full))
        if self.me == 0:
            s0 = s0 - enc
        if self.me == 2:
            s1 = s1 - enc
        return self.msb(ArithShare(s0, s1, x.is_scaled))

    # -- bit injection ----------------------------------------------------

    def bit_to_arith(self, b: BoolShare) -> ArithShare:
        """Arithmetic (unscaled 0/1) sharing of a boolean bit.

        b = b_0 ^ b_1 ^ b_2 is folded as (b_0 ^ b_1) ^ b_2: party 0 knows
        t = b_0 ^ b_1 outright and party 1 knows b_2, so both deal additive
        sharings in one batched round, and one product realizes the XOR:
        t + b_2 - 2*t*b_2.
        """
        if b.bit_width != 1:
            raise ValueError("bit_to_arith expects a single-bit sharing")
        t_val = (b.s0 ^ b.s1) if self.me == 0 else None
        b2_val = b.s1 if self.me == 1 else None
        t_item = (0, RingTensorLike(t_val), b.shape, False)
        b2_item = (1, RingTensorLike(b2_val), b.shape, False)
        t_share, b2_share = self.share_many([t_item, b2_item])
        prod = self.mul(t_share, b2_share)
        two = np.uint64(2)
        return ArithShare(
            t_share.s0 + b2_share.s0 - two * prod.s0,
            t_share.s1 + b2_share.s1 - two * prod.s1,
            False,
        )

    def bit_inject(self, b: BoolShare, y: ArithShare) -> ArithShare:
        """Arithmetic sharing of b * y; constant rounds, no truncation since
        the bit carries no scale."""
        bits = self.bit_to_arith(b)
        if bits.shape != y.shape:
            raise ValueError(f"shape mismatch: {bits.shape} vs {y.shape}")
        out = self.mul(bits, y)
        self._record("arith", out)
        return out


class RingTensorLike:
    """Pre-encoded words for share_many when the dealer already holds ring
    words (used by bit injection to avoid float round-trips)."""

    def __init__(self, words):
        self.data = words
        self.is_scaled = False
