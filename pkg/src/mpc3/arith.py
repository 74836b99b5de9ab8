"""Arithmetic replicated sharing: share/reveal, linear ops, products.

Multiplication follows the cross-term rule: party i computes
z_i = x_i*y_i + x_i*y_{i+1} + x_{i+1}*y_i, masks it with a zero sharing
and hands it to party i-1, which restores the replicated layout in one
round.  When both operands carry the fixed-point scale the product is
rescaled through a truncation pair; pair generation is fused into the
re-sharing round so a scaled product costs one round plus one opening.

All `_many` variants batch independent operations between barriers, so n
parallel products cost the same number of rounds as one.
"""

from __future__ import annotations

import numpy as np

from . import randomness
from .ring import RingTensor, signed, to_words
from .shares import ArithShare
from .transport import next_party, prev_party


class ArithOps:
    """Mixin over Protocol: expects self.session and self.codec."""

    # -- basics -----------------------------------------------------------

    @property
    def me(self) -> int:
        return self.session.party_id

    @property
    def stats(self):
        return self.session.channels.stats

    def barrier(self):
        self.session.channels.barrier_round()

    def _record(self, kind: str, share):
        if self.session.recorder is not None:
            self.session.recorder(kind, share.s0, share.s1)

    def _encode_plain(self, value, is_scaled: bool) -> np.ndarray:
        """Public operand -> ring words matching the share's scale."""
        if isinstance(value, RingTensor):
            if value.is_scaled != is_scaled:
                raise ValueError("scale mismatch between share and public operand")
            return value.data
        if is_scaled:
            return self.codec.encode_tensor(np.asarray(value, dtype=np.float64)).data
        return to_words(np.asarray(value))

    # -- sharing ----------------------------------------------------------

    def share_many(self, items) -> list:
        """Batched input sharing; items are (owner, value, shape, is_scaled).

        Owners pass the plaintext (RingTensor or real array); other parties
        pass value=None and the agreed shape.  One round for the whole batch.
        """
        states = [self._share_begin(*item) for item in items]
        out = [self._share_finish(*st) for st in states]
        self.barrier()
        for sh in out:
            self._record("arith", sh)
        return out

    def share(self, owner: int, value=None, shape=None, is_scaled: bool = True) -> ArithShare:
        return self.share_many([(owner, value, shape, is_scaled)])[0]

    def _share_begin(self, owner, value, shape, is_scaled):
        me, ch = self.me, self.session.channels
        if me != owner:
            if shape is None:
                raise ValueError("non-owners must pass the tensor shape")
            return (owner, tuple(shape), is_scaled, None)
        if hasattr(value, "data") and hasattr(value, "is_scaled"):  # RingTensor-like
            words = value.data
            is_scaled = value.is_scaled
        else:
            words = self.codec.encode_tensor(np.asarray(value, dtype=np.float64), is_scaled).data
        n = words.size
        # Absolute components: x_0, x_1 random, x_2 dependent.
        comps = [None, None, None]
        comps[0] = self.session.rng.own.words(n).reshape(words.shape)
        comps[1] = self.session.rng.own.words(n).reshape(words.shape)
        comps[2] = words - comps[0] - comps[1]
        for peer in (next_party(me), prev_party(me)):
            pair = np.concatenate([comps[peer].ravel(), comps[(peer + 1) % 3].ravel()])
            ch.send_words(peer, pair)
        return (owner, words.shape, is_scaled, (comps[me], comps[(me + 1) % 3]))

    def _share_finish(self, owner, shape, is_scaled, local_pair) -> ArithShare:
        if local_pair is not None:
            return ArithShare(local_pair[0], local_pair[1], is_scaled)
        n = int(np.prod(shape, dtype=np.int64))
        words = self.session.channels.recv_words(owner, 2 * n)
        return ArithShare(words[:n].reshape(shape), words[n:].reshape(shape), is_scaled)

    def share_public(self, value, is_scaled: bool = True) -> ArithShare:
        """Sharing of a publicly known tensor: component x_0 holds the value."""
        words = self._encode_plain(value, is_scaled)
        zero = np.zeros_like(words)
        if self.me == 0:
            return ArithShare(words.copy(), zero, is_scaled)
        if self.me == 2:
            return ArithShare(zero, words.copy(), is_scaled)
        return ArithShare(zero, zero.copy(), is_scaled)

    # -- reveal -----------------------------------------------------------

    def reveal_many(self, shares, to=None) -> list:
        ch, me = self.session.channels, self.me
        if to is None:
            for x in shares:
                ch.send_words(next_party(me), x.s0.ravel())
            missing = [ch.recv_words(prev_party(me), x.size).reshape(x.shape) for x in shares]
            self.barrier()
            with np.errstate(over="ignore"):  # modular wrap is intended
                return [
                    RingTensor(x.s0 + x.s1 + m, x.is_scaled) for x, m in zip(shares, missing)
                ]
        if me == prev_party(to):
            for x in shares:
                ch.send_words(to, x.s0.ravel())
        out = None
        if me == to:
            missing = [ch.recv_words(prev_party(me), x.size).reshape(x.shape) for x in shares]
            with np.errstate(over="ignore"):  # modular wrap is intended
                out = [RingTensor(x.s0 + x.s1 + m, x.is_scaled) for x, m in zip(shares, missing)]
        self.barrier()
        return out

    def reveal(self, x: ArithShare, to=None):
        out = self.reveal_many([x], to)
        return out[0] if out is not None else None

    # -- local linear algebra ---------------------------------------------

    def add(self, x: ArithShare, y) -> ArithShare:
        if isinstance(y, ArithShare):
            if x.is_scaled != y.is_scaled:
                raise ValueError("scale mismatch in add")
            return ArithShare(x.s0 + y.s0, x.s1 + y.s1, x.is_scaled)
        return self._add_public(x, self._encode_plain(y, x.is_scaled))

    def sub(self, x: ArithShare, y) -> ArithShare:
        if isinstance(y, ArithShare):
            if x.is_scaled != y.is_scaled:
                raise ValueError("scale mismatch in sub")
            return ArithShare(x.s0 - y.s0, x.s1 - y.s1, x.is_scaled)
        return self._add_public(x, -self._encode_plain(y, x.is_scaled))

    def neg(self, x: ArithShare) -> ArithShare:
        return x.map(lambda a: -a)

    def _add_public(self, x: ArithShare, words: np.ndarray) -> ArithShare:
        # Public constants live in component x_0, held by parties 0 and 2.
        if words.shape != x.shape and words.size != 1:
            raise ValueError(f"shape mismatch: {x.shape} vs {words.shape}")
        s0 = x.s0 + words if self.me == 0 else x.s0.copy()
        s1 = x.s1 + words if self.me == 2 else x.s1.copy()
        return ArithShare(s0, s1, x.is_scaled)

    def mul_public(self, x: ArithShare, c) -> ArithShare:
        """Multiply by a public constant; truncates when both carry scale.

        Integer constants (python/numpy ints, unscaled RingTensor) multiply
        without rescaling; real constants are fixed-point encoded first.
        """
        if isinstance(c, RingTensor):
            c_scaled = c.is_scaled
        else:
            c_scaled = np.asarray(c).dtype.kind == "f"
        words = self._encode_plain(c, c_scaled)
        z = ArithShare(x.s0 * words, x.s1 * words, x.is_scaled or c_scaled)
        if x.is_scaled and c_scaled:
            z = self.truncate(z)
        return z

    def lincomb(self, terms, const=None) -> ArithShare:
        """sum_k c_k * x_k (+ const) for public reals c_k and scaled shares x_k.

        Coefficients are encoded once, products accumulated at double scale,
        and a single truncation restores the working scale.
        """
        acc0 = acc1 = None
        for c, x in terms:
            if not x.is_scaled:
                raise ValueError("lincomb expects scaled shares")
            w = self.codec.encode_tensor(np.asarray(c, dtype=np.float64)).data
            t0, t1 = x.s0 * w, x.s1 * w
            acc0 = t0 if acc0 is None else acc0 + t0
            acc1 = t1 if acc1 is None else acc1 + t1
        z = ArithShare(acc0, acc1, True)
        if const is not None:
            # Constant enters at double scale to match the pending truncation.
            enc = np.rint(np.asarray(const, dtype=np.float64) * self.codec.scale * self.codec.scale)
            z = self._add_public(z, enc.astype(np.int64).view(np.uint64))
        return self.truncate(z)

    def transpose(self, x: ArithShare) -> ArithShare:
        return x.map(lambda a: a.T.copy())

    def take_rows(self, x: ArithShare, idx) -> ArithShare:
        return x.map(lambda a: a[idx])

    def concat(self, shares, axis=0) -> ArithShare:
        scaled = shares[0].is_scaled
        return ArithShare(
            np.concatenate([s.s0 for s in shares], axis=axis),
            np.concatenate([s.s1 for s in shares], axis=axis),
            scaled,
        )

    def stack(self, shares, axis=0) -> ArithShare:
        return ArithShare(
            np.stack([s.s0 for s in shares], axis=axis),
            np.stack([s.s1 for s in shares], axis=axis),
            shares[0].is_scaled,
        )

    def sum(self, x: ArithShare, axis=0) -> ArithShare:
        return x.map(lambda a: np.add.reduce(a, axis=axis))

    def reshape(self, x: ArithShare, shape) -> ArithShare:
        return x.map(lambda a: a.reshape(shape))

    # -- products ---------------------------------------------------------

    def mul(self, x: ArithShare, y: ArithShare) -> ArithShare:
        return self.mul_many([(x, y)])[0]

    def matmul(self, x: ArithShare, y: ArithShare) -> ArithShare:
        return self.mul_many([(x, y)], matmul=True)[0]

    def mul_many(self, pairs, matmul: bool = False) -> list:
        """Independent products sharing one re-sharing round (and one opening
        round when truncation applies)."""
        ch, me = self.session.channels, self.me
        states = []
        for x, y in pairs:
            if matmul:
                if x.s0.ndim != 2 or y.s0.ndim != 2 or x.shape[1] != y.shape[0]:
                    raise ValueError(f"matmul dimension mismatch: {x.shape} x {y.shape}")
                z_local = x.s0 @ y.s0 + x.s0 @ y.s1 + x.s1 @ y.s0
            else:
                if x.shape != y.shape and x.size != 1 and y.size != 1:
                    raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
                z_local = x.s0 * y.s0 + x.s0 * y.s1 + x.s1 * y.s0
            z_local = z_local + randomness.gen_zero_sharing(self.session.rng, z_local.shape)
            scaled = x.is_scaled or y.is_scaled
            needs_trunc = x.is_scaled and y.is_scaled
            ch.send_words(prev_party(me), z_local.ravel())
            pair_state = None
            if needs_trunc:
                pair_state = randomness.trunc_pair_begin(
                    self.session.rng, ch, z_local.shape, self.codec.frac_bits
                )
            states.append((z_local, scaled, needs_trunc, pair_state))
        mids = []
        for z_local, scaled, needs_trunc, pair_state in states:
            z_next = ch.recv_words(next_party(me), z_local.size).reshape(z_local.shape)
            pair = None
            if needs_trunc:
                pair = randomness.trunc_pair_finish(self.session.rng, ch, pair_state)
            mids.append((ArithShare(z_local, z_next, scaled), pair))
        self.barrier()
        out, trunc_idx, trunc_args = [], [], []
        for i, (z, pair) in enumerate(mids):
            out.append(z)
            if pair is not None:
                trunc_idx.append(i)
                trunc_args.append((z, pair))
        if trunc_args:
            truncated = self._truncate_with_pairs(trunc_args)
            for i, t in zip(trunc_idx, truncated):
                out[i] = t
        for z in out:
            self._record("arith", z)
        return out

    # -- truncation -------------------------------------------------------

    def truncate(self, x: ArithShare) -> ArithShare:
        return self.truncate_many([x])[0]

    def truncate_many(self, xs) -> list:
        """Rescale doubly-scaled values by 2^-frac_bits, one ulp of error.

        Mask with r, open x - r, shift the public value arithmetically, and
        add the preshared r >> frac_bits back in.
        """
        ch = self.session.channels
        states = [
            randomness.trunc_pair_begin(self.session.rng, ch, x.shape, self.codec.frac_bits)
            for x in xs
        ]
        pairs = [randomness.trunc_pair_finish(self.session.rng, ch, st) for st in states]
        self.barrier()
        out = self._truncate_with_pairs(list(zip(xs, pairs)))
        for z in out:
            self._record("arith", z)
        return out

    def _truncate_with_pairs(self, items) -> list:
        """Opening phase of truncation; one round for the whole batch."""
        ch, me = self.session.channels, self.me
        # Rounding bias: the result is floor((x + bias - (r mod 2^f)) / 2^f),
        # so with bias = 2^f - 1 the dither from r can push the floor up but
        # never down, keeping the error strictly within one unit in the last
        # place and centered around zero.
        bias = np.uint64(self.codec.scale - 1)
        masked = []
        for x, (r, r_shifted) in items:
            m = ArithShare(x.s0 - r.s0, x.s1 - r.s1, False)
            ch.send_words(next_party(me), m.s0.ravel())
            masked.append(m)
        results = []
        for (x, (r, r_shifted)), m in zip(items, masked):
            third = ch.recv_words(prev_party(me), m.size).reshape(m.shape)
            with np.errstate(over="ignore"):  # modular wrap is intended
                opened = m.s0 + m.s1 + third + bias
            shifted = (signed(opened) >> self.codec.frac_bits).view(np.uint64)
            z = self._add_public(ArithShare(r_shifted.s0, r_shifted.s1, True), shifted)
            results.append(z)
        self.barrier()
        return results
