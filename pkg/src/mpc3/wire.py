"""Binary framing for party-to-party messages.

Layout (little-endian):

    magic      4 bytes  "AB3\\0"
    version    u8       1
    msg_type   u8       0 = tensor words, 1 = control
    reserved   u16      0
    session_id u64
    sequence   u64
    payload_len u32
    payload    payload_len bytes (LE u64 words for msg_type 0)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FramingError

MAGIC = b"AB3\0"
VERSION = 1
MSG_TENSOR = 0
MSG_CONTROL = 1

_HEADER = struct.Struct("<4sBBHQQI")
HEADER_SIZE = _HEADER.size


@dataclass
class WireMessage:
    msg_type: int
    session_id: int
    sequence: int
    payload: bytes

    def encode(self) -> bytes:
        header = _HEADER.pack(
            MAGIC, VERSION, self.msg_type, 0, self.session_id, self.sequence, len(self.payload)
        )
        return header + self.payload


def decode_header(buf: bytes):
    """Parse a header; returns (msg_type, session_id, sequence, payload_len)."""
    magic, version, msg_type, reserved, session_id, sequence, payload_len = _HEADER.unpack(buf)
    if magic != MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FramingError(f"unsupported version {version}")
    if reserved != 0:
        raise FramingError("reserved field must be zero")
    if msg_type not in (MSG_TENSOR, MSG_CONTROL):
        raise FramingError(f"unknown msg_type {msg_type}")
    return msg_type, session_id, sequence, payload_len


def decode(buf: bytes) -> WireMessage:
    if len(buf) < HEADER_SIZE:
        raise FramingError("short message")
    msg_type, session_id, sequence, payload_len = decode_header(buf[:HEADER_SIZE])
    payload = buf[HEADER_SIZE:]
    if len(payload) != payload_len:
        raise FramingError(f"payload length {len(payload)} != declared {payload_len}")
    if msg_type == MSG_TENSOR and payload_len % 8 != 0:
        raise FramingError("tensor payload not a multiple of 8 bytes")
    return WireMessage(msg_type, session_id, sequence, payload)


def words_to_payload(words: np.ndarray) -> bytes:
    return np.ascontiguousarray(words, dtype=np.uint64).astype("<u8").tobytes()


def payload_to_words(payload: bytes) -> np.ndarray:
    if len(payload) % 8 != 0:
        raise FramingError("tensor payload not a multiple of 8 bytes")
    return np.frombuffer(payload, dtype="<u8").astype(np.uint64)
