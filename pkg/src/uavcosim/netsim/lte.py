"""Cellular link abstraction.

Rather than simulating the LTE MAC, each transfer pays three costs:

    delay = scheduling wait + serialization + core network latency

The scheduling wait is uniform over one uplink grant period, which grows
with the number of attached devices (1 ms per device, capped at 40 ms).
Serialization uses a spectral-efficiency lookup from the link SINR and an
even split of cell bandwidth across attached devices. The core latency is
a flat constant covering the EPC and transport hops.

Per-device transfers are serialized: a new packet cannot enter scheduling
before the previous one left the radio.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

_MS = 1_000_000
_NS = 1_000_000_000


@dataclass(frozen=True)
class LteParams:
    bandwidth_hz: float = 20e6
    core_delay_ns: int = 10 * _MS
    max_ue: int = 40
    grant_cap_ms: int = 40
    # (min SINR dB, spectral efficiency bit/s/Hz), best tier first
    cqi_tiers: tuple = ((22.0, 4.5), (15.0, 2.7), (8.0, 1.4),
                        (2.0, 0.6), (-5.0, 0.15))


class LteError(RuntimeError):
    pass


def grant_period_ns(n_ue: int, params: LteParams = LteParams()) -> int:
    return min(max(1, n_ue), params.grant_cap_ms) * _MS


def spectral_efficiency(sinr_db: float, params: LteParams) -> Optional[float]:
    """bit/s/Hz for the SINR, or None when below the attach threshold."""
    for floor, eff in params.cqi_tiers:
        if sinr_db >= floor:
            return eff
    return None


class LteCell:
    def __init__(self, params: LteParams, rng: random.Random):
        self.params = params
        self.rng = rng
        self._radio_free_ns: dict = {}   # per-UE earliest next scheduling time

    def transfer(self, ue_id, size_bytes: int, sinr_db: float,
                 n_ue: int, t_arrival_ns: int) -> tuple[int, Optional[str]]:
        """Returns (t_done_ns, None) or (t_arrival_ns, drop_reason)."""
        p = self.params
        if n_ue < 1:
            raise LteError("n_ue must be >= 1")
        if n_ue > p.max_ue:
            raise LteError(f"{n_ue} attached devices exceeds cell cap {p.max_ue}")
        eff = spectral_efficiency(sinr_db, p)
        if eff is None:
            return t_arrival_ns, "no-attach"
        start = max(t_arrival_ns, self._radio_free_ns.get(ue_id, 0))
        wait = self.rng.uniform(0.0, grant_period_ns(n_ue, p))
        rate_bps = eff * (p.bandwidth_hz / n_ue)
        ser = size_bytes * 8 * _NS / rate_bps
        radio_done = start + int(wait + ser)
        self._radio_free_ns[ue_id] = radio_done
        return radio_done + p.core_delay_ns, None
