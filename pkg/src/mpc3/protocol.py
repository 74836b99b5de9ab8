"""Party-local protocol engine: arithmetic + boolean operation surface."""

from __future__ import annotations

from .arith import ArithOps
from .boolean import BoolOps
from .ring import FixedPointCodec
from .session import Session


class Protocol(ArithOps, BoolOps):
    """One party's handle on a three-party session.

    All methods are collective: the three parties must call them in the
    same order with compatible arguments, or the run desynchronizes.
    """

    def __init__(self, session: Session, frac_bits: int = 16):
        self.session = session
        self.codec = FixedPointCodec(frac_bits)
