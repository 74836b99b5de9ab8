"""Oblivious piecewise-affine evaluation and sigmoid approximations.

A secret input is compared against every public segmentation point in one
batched MSB evaluation; consecutive predicate XORs give one-hot segment
indicators (ascending points make the predicate sequence monotone, so
p_i ^ p_{i+1} equals the literal "not p_i and p_{i+1}" at zero AND cost).
Each segment's affine value is built locally from public coefficients and
selected with one batched bit injection, so the round count is independent
of the number of segments.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .protocol import Protocol
from .shares import ArithShare, BoolShare


@dataclass
class PiecewiseSpec:
    """Public description: points s_1..s_{n-1} (ascending) and n affine
    pieces (intercept, slope); piece i covers [s_i, s_{i+1})."""

    segment_points: list
    polys: list  # [(intercept, slope)] per segment

    def __post_init__(self):
        pts = self.segment_points
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise ValueError("segment points must be strictly ascending")
        if len(self.polys) != len(pts) + 1:
            raise ValueError("need exactly one polynomial per segment")

    def reference(self, x) -> np.ndarray:
        """Plaintext evaluation with the same boundary convention."""
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(np.asarray(self.segment_points), x, side="right")
        intercepts = np.array([p[0] for p in self.polys])
        slopes = np.array([p[1] for p in self.polys])
        return intercepts[idx] + slopes[idx] * x


class SigmoidKind(enum.Enum):
    THREE_PIECE = 3
    FIVE_PIECE = 5

    @classmethod
    def parse(cls, value) -> "SigmoidKind":
        if isinstance(value, cls):
            return value
        if str(value) in ("3", "three", "3piece", "3-piece"):
            return cls.THREE_PIECE
        if str(value) in ("5", "five", "5piece", "5-piece"):
            return cls.FIVE_PIECE
        raise ValueError(f"unknown sigmoid kind {value!r}")


_THREE_PIECE = PiecewiseSpec(
    segment_points=[-0.5, 0.5],
    polys=[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
)

_FIVE_PIECE = PiecewiseSpec(
    segment_points=[-5.0, -2.5, 2.5, 5.0],
    polys=[
        (1e-4, 0.0),
        (0.145, 0.02776),
        (0.5, 0.17),
        (0.85498, 0.02776),
        (1.0 - 1e-4, 0.0),
    ],
)


def sigmoid_spec(kind) -> PiecewiseSpec:
    return _THREE_PIECE if SigmoidKind.parse(kind) is SigmoidKind.THREE_PIECE else _FIVE_PIECE


def _bool_public(prot: Protocol, words: np.ndarray, bit_width=1) -> BoolShare:
    zero = np.zeros_like(words)
    if prot.me == 0:
        return BoolShare(words.copy(), zero, bit_width)
    if prot.me == 2:
        return BoolShare(zero, words.copy(), bit_width)
    return BoolShare(zero, zero.copy(), bit_width)


def _indicators(prot: Protocol, p: BoolShare, n_pieces: int, literal_and: bool) -> BoolShare:
    """One-hot segment bits from the stacked predicates p_1..p_{n-1}."""

    def pad(comp):
        shape = (1,) + comp.shape[1:]
        lo = np.zeros(shape, dtype=np.uint64)  # p_0 = [x < -inf] = 0
        hi = np.zeros(shape, dtype=np.uint64)  # p_n = [x < +inf] = 1 (public, comp 0)
        return np.concatenate([lo, comp, hi], axis=0)

    full = BoolShare(pad(p.s0), pad(p.s1), 1)
    ones_mask = np.zeros(full.shape, dtype=np.uint64)
    ones_mask[-1] = 1
    full = prot.xor_public(full, ones_mask)
    lower = full.map(lambda a: a[:-1])
    upper = full.map(lambda a: a[1:])
    if literal_and:
        return prot.and_(prot.not_(lower), upper)
    # Monotone predicates: (not p_i) and p_{i+1}  ==  p_i xor p_{i+1}.
    return prot.xor(lower, upper)


def eval_piecewise(prot: Protocol, spec: PiecewiseSpec, x: ArithShare,
                   literal_and: bool = False) -> ArithShare:
    """Sharing of f_i(decode(x)) for the segment containing x."""
    if not x.is_scaled:
        raise ValueError("piecewise evaluation expects a scaled input")
    n = len(spec.polys)
    p = prot.lt_consts(x, spec.segment_points)
    b = _indicators(prot, p, n, literal_and)

    # Affine piece values at every segment, built locally at double scale.
    slopes = np.array([poly[1] for poly in spec.polys], dtype=np.float64)
    intercepts = np.array([poly[0] for poly in spec.polys], dtype=np.float64)
    shape_tail = (1,) * x.s0.ndim
    slope_enc = np.rint(slopes * prot.codec.scale).astype(np.int64).view(np.uint64)
    slope_enc = slope_enc.reshape((n,) + shape_tail)
    s0 = x.s0[None, ...] * slope_enc
    s1 = x.s1[None, ...] * slope_enc
    inter_enc = np.rint(intercepts * prot.codec.scale * prot.codec.scale)
    inter_enc = inter_enc.astype(np.int64).view(np.uint64).reshape((n,) + shape_tail)
    inter_b = np.broadcast_to(inter_enc, (n,) + x.shape)
    double = ArithShare(np.ascontiguousarray(s0), np.ascontiguousarray(s1), True)
    values = prot.truncate(prot._add_public(double, inter_b))

    selected = prot.bit_inject(b, values)
    return prot.sum(selected, axis=0)


def sigmoid(prot: Protocol, x: ArithShare, kind=SigmoidKind.FIVE_PIECE,
            literal_and: bool = False) -> ArithShare:
    return eval_piecewise(prot, sigmoid_spec(kind), x, literal_and)


def true_sigmoid(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (1.0 + np.exp(-x))


def sigmoid_table(kind, lo=-8.0, hi=8.0, step=0.001, frac_bits=16, seeds=(1, 2, 3)):
    """Grid of (x, approx, true, error) with approx computed in the simulator."""
    from .simulator import simulate  # local import: simulator builds Protocols

    grid = np.arange(lo, hi + step / 2, step)

    def program(prot: Protocol):
        x = prot.share(0, grid if prot.me == 0 else None, shape=grid.shape)
        out = sigmoid(prot, x, kind)
        return prot.reveal(out)

    result = simulate(program, seeds=seeds, frac_bits=frac_bits)
    from .ring import FixedPointCodec

    approx = FixedPointCodec(frac_bits).decode_tensor(result.outputs[0])
    truth = true_sigmoid(grid)
    return grid, approx, truth, approx - truth


def sigmoid_error_report(kind, lo=-8.0, hi=8.0, step=0.001, frac_bits=16) -> dict:
    grid, approx, truth, err = sigmoid_table(kind, lo, hi, step, frac_bits)
    abs_err = np.abs(err)
    return {
        "kind": SigmoidKind.parse(kind).name,
        "grid_points": int(grid.size),
        "max_abs_error": float(abs_err.max()),
        "mean_abs_error": float(abs_err.mean()),
        "argmax_x": float(grid[int(abs_err.argmax())]),
    }
