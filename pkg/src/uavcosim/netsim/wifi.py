"""802.11 DCF medium access on a shared collision domain.

The channel keeps its own virtual clock and advances in contention rounds:

    round = DIFS + (min backoff among contenders) idle slots + transmission

A unique minimum wins and transmits (T_tx + SIFS + ACK); a tie collides
(longest T_tx + ACK timeout), the colliders double their window and redraw.
Losers of the countdown keep their residual backoff, which is the standard
decrement-and-freeze behavior.

Tagged packets enter through submit(), which advances the shared clock until
that packet either completes or is dropped, evolving every other station
(interferers, other vehicles) along the way. Because submit() resolves its
packet before returning, the channel clock may run ahead of the caller's;
a later submit whose arrival lands in that already-simulated span simply
queues from its true arrival time and starts contending at the current
channel time. The error this introduces is bounded by one packet service
time and only appears under load, where the medium was busy anyway.

Stations with a pacing rate generate their own fixed-interval traffic
internally (used for background load); their packets follow the exact same
queue, expiry, and retry rules as tagged ones.
"""

from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass
from typing import Optional

_NS = 1_000_000_000


@dataclass(frozen=True)
class WifiParams:
    slot_ns: int = 9_000
    difs_ns: int = 34_000
    sifs_ns: int = 16_000
    ack_ns: int = 44_000
    cw_min: int = 15
    cw_max: int = 1023
    retry_limit: int = 7          # max transmission attempts per packet
    queue_max_delay_ns: int = 500_000_000
    queue_cap: int = 512
    sensitivity_dbm: float = -92.0
    # (min RSS dBm, PHY rate Mbps), strongest tier first
    rate_tiers: tuple = ((-65.0, 54.0), (-75.0, 36.0), (-85.0, 18.0), (-92.0, 6.0))


def rate_for_rss(rss_dbm: float, params: WifiParams) -> Optional[float]:
    """PHY rate for a link, or None when below sensitivity."""
    for floor, mbps in params.rate_tiers:
        if rss_dbm >= floor:
            return mbps
    return None


def tx_time_ns(size_bytes: int, rate_mbps: float) -> int:
    return round(size_bytes * 8 * 1000.0 / rate_mbps)


class _Pkt:
    __slots__ = ("arrival_ns", "size_bytes", "rate_mbps", "retries",
                 "done_ns", "reason")

    def __init__(self, arrival_ns: int, size_bytes: int, rate_mbps: float):
        self.arrival_ns = arrival_ns
        self.size_bytes = size_bytes
        self.rate_mbps = rate_mbps
        self.retries = 0
        self.done_ns: Optional[int] = None
        self.reason: Optional[str] = None


class _Station:
    __slots__ = ("sid", "queue", "cw", "backoff", "hol_fresh",
                 "pace_interval_ns", "next_arrival_ns", "pace_bytes",
                 "pace_rate_mbps", "delivered_bits", "drops")

    def __init__(self, sid):
        self.sid = sid
        self.queue: deque[_Pkt] = deque()
        self.cw = 0          # set from params on add
        self.backoff = 0
        self.hol_fresh = True
        self.pace_interval_ns: Optional[int] = None
        self.next_arrival_ns = 0
        self.pace_bytes = 0
        self.pace_rate_mbps = 54.0
        self.delivered_bits = 0
        self.drops: Counter = Counter()


class WifiError(RuntimeError):
    pass


class DcfChannel:
    def __init__(self, params: WifiParams, rng: random.Random, name: str = "wifi"):
        self.params = params
        self.rng = rng
        self.name = name
        self.vt_ns = 0
        self.busy_ns = 0
        self.stations: dict = {}
        self.delivered = 0
        self.drops: Counter = Counter()

    # -- membership ---------------------------------------------------------

    def add_station(self, sid, *, pace_rate_mbps: float = None,
                    pace_bytes: int = 1000, phy_rate_mbps: float = 54.0):
        if sid in self.stations:
            raise WifiError(f"station {sid!r} already on channel {self.name}")
        st = _Station(sid)
        st.cw = self.params.cw_min
        if pace_rate_mbps is not None:
            st.pace_interval_ns = round(pace_bytes * 8 * _NS / (pace_rate_mbps * 1e6))
            # stagger paced sources so they do not arrive in lockstep
            st.next_arrival_ns = max(self.vt_ns, 0) + self.rng.randrange(
                max(st.pace_interval_ns, 1))
            st.pace_bytes = pace_bytes
            st.pace_rate_mbps = phy_rate_mbps
        self.stations[sid] = st

    def remove_station(self, sid):
        st = self.stations.pop(sid, None)
        if st is None:
            return
        for pkt in st.queue:
            pkt.done_ns = self.vt_ns
            pkt.reason = "station-removed"
            st.drops["station-removed"] += 1
            self.drops["station-removed"] += 1

    def has_station(self, sid) -> bool:
        return sid in self.stations

    # -- traffic ------------------------------------------------------------

    def submit(self, sid, size_bytes: int, rate_mbps: float,
               t_arrival_ns: int) -> tuple[int, Optional[str]]:
        """Queue one packet and run the channel until it resolves.

        Returns (t_done_ns, None) on delivery or (t_drop_ns, reason).
        """
        try:
            st = self.stations[sid]
        except KeyError:
            raise WifiError(f"unknown station {sid!r} on channel {self.name}") from None
        if size_bytes <= 0 or rate_mbps <= 0:
            raise ValueError("size_bytes and rate_mbps must be positive")
        if len(st.queue) >= self.params.queue_cap:
            self._count_drop(st, "queue-full")
            return t_arrival_ns, "queue-full"
        pkt = _Pkt(t_arrival_ns, size_bytes, rate_mbps)
        if not st.queue:
            st.hol_fresh = True
        st.queue.append(pkt)
        self._advance(tagged=pkt)
        if pkt.reason is None:
            return pkt.done_ns, None
        return pkt.done_ns, pkt.reason

    def advance_to(self, t_ns: int):
        """Evolve background traffic up to t_ns (no tagged packet)."""
        if t_ns > self.vt_ns:
            self._advance(t_limit_ns=t_ns)

    def busy_fraction(self) -> float:
        return self.busy_ns / self.vt_ns if self.vt_ns > 0 else 0.0

    def delivered_bits(self, sid) -> int:
        return self.stations[sid].delivered_bits

    # -- engine ---------------------------------------------------------------

    def _count_drop(self, st: _Station, reason: str):
        st.drops[reason] += 1
        self.drops[reason] += 1

    def _next_activation(self) -> Optional[int]:
        t = None
        for st in self.stations.values():
            cand = None
            if st.queue:
                cand = st.queue[0].arrival_ns
            if st.pace_interval_ns is not None:
                cand = st.next_arrival_ns if cand is None else min(cand, st.next_arrival_ns)
            if cand is not None and (t is None or cand < t):
                t = cand
        return t

    def _materialize(self, st: _Station):
        if st.pace_interval_ns is None:
            return
        while st.next_arrival_ns <= self.vt_ns:
            if len(st.queue) < self.params.queue_cap:
                if not st.queue:
                    st.hol_fresh = True
                st.queue.append(_Pkt(st.next_arrival_ns, st.pace_bytes,
                                     st.pace_rate_mbps))
            else:
                self._count_drop(st, "queue-full")
            st.next_arrival_ns += st.pace_interval_ns

    def _collect_active(self) -> list:
        p = self.params
        active = []
        for st in self.stations.values():
            self._materialize(st)
            # stale head-of-line packets never reach the air
            while (st.queue and st.queue[0].arrival_ns <= self.vt_ns
                   and self.vt_ns - st.queue[0].arrival_ns > p.queue_max_delay_ns):
                pkt = st.queue.popleft()
                pkt.done_ns = self.vt_ns
                pkt.reason = "queue-expired"
                self._count_drop(st, "queue-expired")
                st.hol_fresh = True
            if st.queue and st.queue[0].arrival_ns <= self.vt_ns:
                if st.hol_fresh:
                    st.backoff = self.rng.randint(0, st.cw)
                    st.hol_fresh = False
                active.append(st)
        return active

    def _advance(self, t_limit_ns: int = None, tagged: _Pkt = None):
        p = self.params
        while True:
            if tagged is not None and tagged.done_ns is not None:
                return
            if tagged is None and self.vt_ns >= t_limit_ns:
                return
            active = self._collect_active()
            if tagged is not None and tagged.done_ns is not None:
                return  # expired while collecting
            if not active:
                t_next = self._next_activation()
                if t_next is None:
                    if tagged is not None:
                        raise WifiError("tagged packet vanished from all queues")
                    self.vt_ns = t_limit_ns
                    return
                t_next = max(t_next, self.vt_ns)
                if tagged is None and t_next >= t_limit_ns:
                    self.vt_ns = t_limit_ns
                    return
                self.vt_ns = t_next
                continue

            m = min(st.backoff for st in active)
            self.vt_ns += p.difs_ns + m * p.slot_ns
            txs = [st for st in active if st.backoff == m]
            for st in active:
                st.backoff -= m

            if len(txs) == 1:
                st = txs[0]
                pkt = st.queue.popleft()
                dur = tx_time_ns(pkt.size_bytes, pkt.rate_mbps) + p.sifs_ns + p.ack_ns
                self.vt_ns += dur
                self.busy_ns += dur
                pkt.done_ns = self.vt_ns
                st.delivered_bits += pkt.size_bytes * 8
                self.delivered += 1
                st.cw = p.cw_min
                st.hol_fresh = True
            else:
                dur = max(tx_time_ns(st.queue[0].size_bytes, st.queue[0].rate_mbps)
                          for st in txs) + p.ack_ns
                self.vt_ns += dur
                self.busy_ns += dur
                for st in txs:
                    pkt = st.queue[0]
                    pkt.retries += 1
                    if pkt.retries >= p.retry_limit:
                        st.queue.popleft()
                        pkt.done_ns = self.vt_ns
                        pkt.reason = "retry-exhausted"
                        self._count_drop(st, "retry-exhausted")
                        st.cw = p.cw_min
                    else:
                        st.cw = min(2 * st.cw + 1, p.cw_max)
                    st.hol_fresh = True
