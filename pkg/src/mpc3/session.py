"""Binding of party identity, channels and key material for one run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .randomness import PrfKeySetup
from .transport import Channels


@dataclass
class Session:
    party_id: int
    channels: Channels
    rng: PrfKeySetup
    recorder: Optional[Callable] = None  # (kind, s0, s1) -> None, set in assert mode
