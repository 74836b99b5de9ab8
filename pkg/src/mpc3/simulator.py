"""Deterministic in-process execution of the three party programs.

Three threads run the same program with blocking rendezvous channels.
Messages travel as serialized wire bytes, so byte counts match the TCP
backend exactly.  A watchdog turns a global "everyone blocked on recv"
state into a ProtocolDesyncError instead of a hang, and an optional
assertion mode records every produced share to verify replication
consistency across parties after the run.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import wire
from .errors import IntegrityError, ProtocolDesyncError
from .protocol import Protocol
from .randomness import PrfKeySetup, derive_pair_key
from .session import Session
from .transport import Channels, CommStats, next_party

_WATCHDOG_S = 30.0


class SimHub:
    def __init__(self):
        self.queues = {(s, d): deque() for s in range(3) for d in range(3) if s != d}
        self.cond = threading.Condition()
        self.active = {0, 1, 2}
        self.waiting = {}  # party -> awaited source
        self.dead = False
        self.records = {0: [], 1: [], 2: []}

    def put(self, src: int, dst: int, data: bytes):
        with self.cond:
            self.queues[(src, dst)].append(data)
            self.cond.notify_all()

    def get(self, src: int, dst: int) -> bytes:
        q = self.queues[(src, dst)]
        deadline = time.monotonic() + _WATCHDOG_S
        with self.cond:
            while not q:
                if self.dead:
                    raise ProtocolDesyncError("all parties blocked on recv")
                self.waiting[dst] = src
                if self._deadlocked() or time.monotonic() > deadline:
                    self.dead = True
                    self.cond.notify_all()
                    raise ProtocolDesyncError(
                        f"party {dst} waiting on party {src}: "
                        "parties issued mismatched operation sequences"
                    )
                self.cond.wait(timeout=0.5)
                self.waiting.pop(dst, None)
            self.waiting.pop(dst, None)
            return q.popleft()

    def _deadlocked(self) -> bool:
        if set(self.waiting) != self.active:
            return False
        return all(not self.queues[(src, dst)] for dst, src in self.waiting.items())

    def finish(self, party: int):
        with self.cond:
            self.active.discard(party)
            self.cond.notify_all()

    def record(self, party: int, kind: str, s0: np.ndarray, s1: np.ndarray):
        self.records[party].append((kind, np.array(s0, copy=True), np.array(s1, copy=True)))

    def verify_consistency(self):
        """Party i's second component must equal party i+1's first, op by op."""
        lengths = {p: len(r) for p, r in self.records.items()}
        if len(set(lengths.values())) != 1:
            raise IntegrityError(f"parties recorded different op counts: {lengths}")
        for idx in range(lengths[0]):
            for i in range(3):
                kind_i, _, s1 = self.records[i][idx]
                kind_n, s0_next, _ = self.records[next_party(i)][idx]
                if kind_i != kind_n:
                    raise IntegrityError(f"op {idx}: kind mismatch {kind_i} vs {kind_n}")
                if not np.array_equal(s1, s0_next):
                    raise IntegrityError(
                        f"op {idx}: party {i} second component disagrees with "
                        f"party {next_party(i)} first component"
                    )


class MemoryChannels(Channels):
    def __init__(self, party_id: int, session_id: int, hub: SimHub, barrier_sleep_s: float = 0.0):
        super().__init__(party_id, session_id)
        self.hub = hub
        self.barrier_sleep_s = barrier_sleep_s

    def send_bytes(self, peer: int, payload: bytes, msg_type: int = wire.MSG_CONTROL):
        msg = self._frame(peer, payload, msg_type)
        self.hub.put(self.party_id, peer, msg.encode())

    def recv_bytes(self, peer: int) -> bytes:
        msg = wire.decode(self.hub.get(peer, self.party_id))
        self._check_recv(peer, msg)
        return msg.payload

    def barrier_round(self):
        super().barrier_round()
        if self.barrier_sleep_s:
            time.sleep(self.barrier_sleep_s)


@dataclass
class SimResult:
    outputs: list
    stats: list
    hub: SimHub = None

    def verify_consistency(self):
        self.hub.verify_consistency()


def build_party(party_id: int, hub: SimHub, *, seeds, session_id=0, frac_bits=16,
                assert_mode=False, barrier_sleep_s=0.0) -> Protocol:
    channels = MemoryChannels(party_id, session_id, hub, barrier_sleep_s)
    rng = PrfKeySetup.from_keys(
        party_id, seeds[party_id], session_id,
        derive_pair_key(seeds[next_party(party_id)], session_id),
    )
    recorder = (lambda kind, s0, s1: hub.record(party_id, kind, s0, s1)) if assert_mode else None
    session = Session(party_id, channels, rng, recorder)
    return Protocol(session, frac_bits=frac_bits)


def simulate(program, *, seeds=(1, 2, 3), session_id=0, frac_bits=16,
             assert_mode=False, real_latency_rtt_ms=None) -> SimResult:
    """Run `program(protocol)` on three in-process party streams.

    Deterministic for fixed seeds; raises the first party exception,
    including ProtocolDesyncError when the streams diverge.
    """
    hub = SimHub()
    sleep_s = (real_latency_rtt_ms / 1000.0) if real_latency_rtt_ms else 0.0
    protocols = [
        build_party(i, hub, seeds=seeds, session_id=session_id, frac_bits=frac_bits,
                    assert_mode=assert_mode, barrier_sleep_s=sleep_s)
        for i in range(3)
    ]
    outputs = [None] * 3
    failures = [None] * 3

    def run(i):
        try:
            outputs[i] = program(protocols[i])
        except BaseException as exc:  # noqa: BLE001 - propagated to the caller
            failures[i] = exc
            hub.dead = True
            with hub.cond:
                hub.cond.notify_all()
        finally:
            hub.finish(i)

    threads = [threading.Thread(target=run, args=(i,), daemon=True) for i in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=_WATCHDOG_S * 4)
    real = [e for e in failures if e is not None and not isinstance(e, ProtocolDesyncError)]
    desync = [e for e in failures if isinstance(e, ProtocolDesyncError)]
    if real:
        raise real[0]
    if desync:
        raise desync[0]
    result = SimResult(outputs, [p.session.channels.stats for p in protocols], hub)
    if assert_mode:
        result.verify_consistency()
    return result
