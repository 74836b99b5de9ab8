"""Three-party honest-majority MPC over Z_2^64 with replicated secret
sharing, fixed-point arithmetic, an oblivious piecewise sigmoid, and a
class-weighted logistic regression trainer."""

from .errors import (
    DegenerateClassError,
    EncodingOverflowError,
    FramingError,
    HandshakeError,
    IntegrityError,
    Mpc3Error,
    ProtocolDesyncError,
    TransportTimeoutError,
)
from .evaluation import Dataset, MetricsReport, balanced_accuracy, kfold_cv, load_csv
from .piecewise import PiecewiseSpec, SigmoidKind, eval_piecewise, sigmoid, sigmoid_spec
from .protocol import Protocol
from .ring import FixedPointCodec, RingTensor
from .session import Session
from .shares import ArithShare, BoolShare
from .simulator import simulate
from .trainer import TrainConfig, train
from .transport import CommStats, LatencyModel, PartyConfig, connect

__version__ = "0.1.0"

__all__ = [
    "ArithShare",
    "BoolShare",
    "CommStats",
    "Dataset",
    "DegenerateClassError",
    "EncodingOverflowError",
    "FixedPointCodec",
    "FramingError",
    "HandshakeError",
    "IntegrityError",
    "LatencyModel",
    "MetricsReport",
    "Mpc3Error",
    "PartyConfig",
    "PiecewiseSpec",
    "Protocol",
    "ProtocolDesyncError",
    "RingTensor",
    "Session",
    "SigmoidKind",
    "TrainConfig",
    "TransportTimeoutError",
    "balanced_accuracy",
    "connect",
    "eval_piecewise",
    "kfold_cv",
    "load_csv",
    "sigmoid",
    "sigmoid_spec",
    "simulate",
    "train",
]
