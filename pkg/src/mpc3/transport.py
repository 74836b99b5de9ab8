"""Party identity, communication accounting, and the TCP backend.

Each party keeps one bidirectional link to its next and previous neighbour.
Sends are handed to a background writer thread per link so that two parties
pushing large tensors at each other cannot deadlock on full socket buffers.
A "round" is a pure accounting notion: protocol code calls barrier_round()
once per synchronization phase, however many tensors were exchanged in it.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import wire
from .errors import FramingError, HandshakeError, TransportTimeoutError

N_PARTIES = 3


def next_party(i: int) -> int:
    return (i + 1) % N_PARTIES


def prev_party(i: int) -> int:
    return (i - 1) % N_PARTIES


@dataclass
class PartyConfig:
    party_id: int
    peers: list  # ["host:port"] * 3, indexed by party id
    session_id: int = 0
    seed: int = 0
    connect_timeout_ms: int = 5000

    def __post_init__(self):
        if self.party_id not in (0, 1, 2):
            raise ValueError(f"party_id must be 0, 1 or 2, got {self.party_id}")
        if len(self.peers) != N_PARTIES:
            raise ValueError("peers must list exactly three host:port addresses")

    @classmethod
    def from_json(cls, path) -> "PartyConfig":
        with open(path) as f:
            raw = json.load(f)
        return cls(
            party_id=raw["party_id"],
            peers=raw["peers"],
            session_id=raw.get("session_id", 0),
            seed=raw.get("seed", 0),
            connect_timeout_ms=raw.get("connect_timeout_ms", 5000),
        )

    def address(self, party: int):
        host, port = self.peers[party].rsplit(":", 1)
        return host, int(port)


@dataclass
class CommStats:
    rounds: int = 0
    bytes_sent: dict = field(default_factory=lambda: {0: 0, 1: 0, 2: 0})
    messages: dict = field(default_factory=lambda: {0: 0, 1: 0, 2: 0})

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_sent.values())

    @property
    def total_messages(self) -> int:
        return sum(self.messages.values())

    def as_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "bytes_sent": {str(k): v for k, v in self.bytes_sent.items()},
            "messages": {str(k): v for k, v in self.messages.items()},
            "total_bytes": self.total_bytes,
        }


@dataclass
class LatencyModel:
    """Analytic cost of a trace: rounds * RTT + bytes over bandwidth."""

    rtt_ms: float
    bandwidth_mbps: float

    def modeled_seconds(self, stats: CommStats) -> float:
        wire_time = stats.total_bytes * 8 / (self.bandwidth_mbps * 1e6)
        return stats.rounds * self.rtt_ms / 1000.0 + wire_time


LAN_PROFILE = LatencyModel(rtt_ms=0.5, bandwidth_mbps=1000.0)
WAN_PROFILE = LatencyModel(rtt_ms=50.0, bandwidth_mbps=100.0)


class Channels:
    """Common bookkeeping for both backends: stats and per-channel sequencing."""

    def __init__(self, party_id: int, session_id: int):
        self.party_id = party_id
        self.session_id = session_id
        self.stats = CommStats()
        self._send_seq = {0: 0, 1: 0, 2: 0}
        self._recv_seq = {0: 0, 1: 0, 2: 0}

    def _frame(self, peer: int, payload: bytes, msg_type: int) -> wire.WireMessage:
        seq = self._send_seq[peer]
        self._send_seq[peer] += 1
        msg = wire.WireMessage(msg_type, self.session_id, seq, payload)
        self.stats.bytes_sent[peer] += wire.HEADER_SIZE + len(payload)
        self.stats.messages[peer] += 1
        return msg

    def _check_recv(self, peer: int, msg: wire.WireMessage):
        if msg.session_id != self.session_id:
            raise HandshakeError(
                f"session mismatch: got {msg.session_id}, expected {self.session_id}"
            )
        if msg.sequence != self._recv_seq[peer]:
            raise FramingError(
                f"sequence gap from party {peer}: got {msg.sequence}, "
                f"expected {self._recv_seq[peer]}"
            )
        self._recv_seq[peer] += 1

    def send_words(self, peer: int, words: np.ndarray):
        self.send_bytes(peer, wire.words_to_payload(words), wire.MSG_TENSOR)

    def recv_words(self, peer: int, count: int) -> np.ndarray:
        payload = self.recv_bytes(peer)
        words = wire.payload_to_words(payload)
        if words.size != count:
            raise FramingError(f"expected {count} words from party {peer}, got {words.size}")
        return words

    def barrier_round(self):
        self.stats.rounds += 1

    # backend-specific
    def send_bytes(self, peer: int, payload: bytes, msg_type: int = wire.MSG_CONTROL):
        raise NotImplementedError

    def recv_bytes(self, peer: int) -> bytes:
        raise NotImplementedError

    def close(self):
        pass


class _Link:
    """One TCP connection with a dedicated writer thread."""

    def __init__(self, sock: socket.socket, timeout_s: float):
        self.sock = sock
        self.sock.settimeout(timeout_s)
        self.rfile = sock.makefile("rb")
        self.outbox: queue.Queue = queue.Queue()
        self.error = None
        self.writer = threading.Thread(target=self._write_loop, daemon=True)
        self.writer.start()

    def _write_loop(self):
        while True:
            item = self.outbox.get()
            if item is None:
                return
            try:
                self.sock.sendall(item)
            except OSError as exc:  # surfaced on the next recv
                self.error = exc
                return

    def send(self, data: bytes):
        if self.error is not None:
            raise TransportTimeoutError(f"link is down: {self.error}")
        self.outbox.put(data)

    def recv_message(self) -> wire.WireMessage:
        try:
            header = self.rfile.read(wire.HEADER_SIZE)
        except socket.timeout as exc:
            raise TransportTimeoutError("recv timed out") from exc
        if header is None or len(header) < wire.HEADER_SIZE:
            raise TransportTimeoutError("connection dropped")
        msg_type, session_id, sequence, payload_len = wire.decode_header(header)
        payload = self.rfile.read(payload_len) if payload_len else b""
        if len(payload) != payload_len:
            raise TransportTimeoutError("connection dropped mid-payload")
        return wire.WireMessage(msg_type, session_id, sequence, payload)

    def close(self):
        self.outbox.put(None)
        self.writer.join(timeout=1.0)
        try:
            self.sock.close()
        except OSError:
            pass


class TcpChannels(Channels):
    def __init__(self, party_id: int, session_id: int, links: dict):
        super().__init__(party_id, session_id)
        self.links = links  # peer id -> _Link

    def send_bytes(self, peer: int, payload: bytes, msg_type: int = wire.MSG_CONTROL):
        msg = self._frame(peer, payload, msg_type)
        self.links[peer].send(msg.encode())

    def recv_bytes(self, peer: int) -> bytes:
        msg = self.links[peer].recv_message()
        self._check_recv(peer, msg)
        return msg.payload

    def close(self):
        for link in self.links.values():
            link.close()


def _hello_payload(config: PartyConfig, pair_key: bytes) -> bytes:
    return bytes([config.party_id]) + pair_key


def connect(config: PartyConfig, pair_key: bytes) -> tuple:
    """Establish the 3-party mesh; returns (TcpChannels, next party's pair key).

    Party i listens at its own address, dials party i+1 and accepts from
    party i-1.  Each side sends a hello carrying its id and its generated
    pairwise PRF key, so party i leaves with key material k_i and k_{i+1}.
    """
    timeout_s = config.connect_timeout_ms / 1000.0
    deadline = time.monotonic() + timeout_s
    me = config.party_id

    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind(config.address(me))
    listener.listen(1)
    listener.settimeout(timeout_s)

    # Dial the next party, retrying until its listener is up.
    out_sock = None
    while True:
        try:
            out_sock = socket.create_connection(
                config.address(next_party(me)), timeout=max(0.05, deadline - time.monotonic())
            )
            break
        except OSError:
            if time.monotonic() >= deadline:
                listener.close()
                raise TransportTimeoutError(
                    f"could not reach party {next_party(me)} within {config.connect_timeout_ms} ms"
                )
            time.sleep(0.05)

    try:
        in_sock, _ = listener.accept()
    except socket.timeout:
        out_sock.close()
        listener.close()
        raise TransportTimeoutError("no inbound connection from previous party")
    finally:
        listener.close()

    out_sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    in_sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    links = {next_party(me): _Link(out_sock, timeout_s), prev_party(me): _Link(in_sock, timeout_s)}
    ch = TcpChannels(me, config.session_id, links)

    # Handshake both links; the hello to the previous party carries our key k_i.
    ch.send_bytes(prev_party(me), _hello_payload(config, pair_key))
    ch.send_bytes(next_party(me), _hello_payload(config, b""))

    next_key = None
    for peer in (prev_party(me), next_party(me)):
        try:
            payload = ch.recv_bytes(peer)
        except FramingError as exc:
            raise HandshakeError(f"handshake with party {peer} failed: {exc}") from exc
        if not payload:
            raise HandshakeError(f"empty hello from party {peer}")
        their_id = payload[0]
        if their_id == me:
            raise HandshakeError(f"duplicate party id {me}")
        if their_id != peer:
            raise HandshakeError(f"expected party {peer} on this link, got {their_id}")
        if peer == next_party(me):
            next_key = payload[1:]
            if len(next_key) != 16:
                raise HandshakeError("handshake missing pairwise key material")
    # Handshake traffic is setup cost, not protocol communication: reset the
    # counters so both backends account identically from the first share.
    ch.stats = CommStats()
    return ch, next_key
