"""Event loop shared by the flight, network and bridge tasks.

One loop instance drives a whole run.  In real-time mode event due times
are aligned to the host monotonic clock (hybrid sleep: coarse sleep, then
yield-spin for the last stretch).  In logical mode the clock simply jumps
to each event's due time, which makes runs bit-reproducible.

Lateness (wall time minus due time at dispatch) is recorded per event and
exposed both as a sliding window (for the freeze monitor) and as a backlog
probe (how far behind the oldest pending event is).
"""

from __future__ import annotations

import heapq
import logging
import threading
import time
from collections import deque
from typing import Any, Callable, Optional

log = logging.getLogger(__name__)

# Chunk caps for the real-time wait loop: re-peek the heap at least this
# often so cross-thread insertions are picked up, and spin below 100 us.
_MAX_BLIND_SLEEP_NS = 20_000_000
_SLEEP_MARGIN_NS = 1_000_000
_SPIN_BELOW_NS = 100_000


class Event:
    """A scheduled callback. Cancel before dispatch to make it a no-op."""

    __slots__ = ("due_ns", "seq", "fn", "args", "kind", "ctx", "cancelled")

    def __init__(self, due_ns: int, seq: int, fn: Callable, args: tuple,
                 kind: str, ctx: Any):
        self.due_ns = due_ns
        self.seq = seq
        self.fn = fn
        self.args = args
        self.kind = kind
        self.ctx = ctx
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "Event") -> bool:
        return (self.due_ns, self.seq) < (other.due_ns, other.seq)


class EventLoop:
    """Single-threaded scheduler with real-time or logical clock.

    ``late_drop_policy(event, lateness_ns) -> bool`` may be installed to
    veto dispatch of late events (Hardlimit mode); returning True suppresses
    the callback.  The policy is responsible for its own accounting.
    """

    def __init__(self, realtime: bool = True, lateness_window: int = 1024):
        self.realtime = realtime
        self._origin_ns = time.monotonic_ns() if realtime else 0
        self._vnow_ns = 0
        self._heap: list[Event] = []
        self._seq = 0
        self._lock = threading.Lock()
        self._running = False
        self._stopped = False
        self.late_drop_policy: Optional[Callable[[Event, int], bool]] = None
        # (dispatch_time_ns, lateness_ns) of recent events
        self.lateness_samples: deque[tuple[int, int]] = deque(maxlen=lateness_window)
        self.dispatch_lateness_ns = 0
        self.n_dispatched = 0
        self.n_errors = 0
        self.max_lateness_ns = 0

    # -- clock ------------------------------------------------------------

    def now_ns(self) -> int:
        if self.realtime:
            return time.monotonic_ns() - self._origin_ns
        return self._vnow_ns

    # -- scheduling (thread-safe) ------------------------------------------

    def call_at(self, due_ns: int, fn: Callable, *args: Any,
                kind: str = "", ctx: Any = None) -> Event:
        with self._lock:
            self._seq += 1
            ev = Event(int(due_ns), self._seq, fn, args, kind, ctx)
            heapq.heappush(self._heap, ev)
        return ev

    def call_after(self, delay_ns: int, fn: Callable, *args: Any,
                   kind: str = "", ctx: Any = None) -> Event:
        return self.call_at(self.now_ns() + int(delay_ns), fn, *args,
                            kind=kind, ctx=ctx)

    def call_soon(self, fn: Callable, *args: Any, kind: str = "",
                  ctx: Any = None) -> Event:
        return self.call_at(self.now_ns(), fn, *args, kind=kind, ctx=ctx)

    # -- introspection ------------------------------------------------------

    def backlog_lateness_ns(self) -> int:
        """How far behind the oldest pending event is right now."""
        with self._lock:
            while self._heap and self._heap[0].cancelled:
                heapq.heappop(self._heap)
            if not self._heap:
                return 0
            return max(0, self.now_ns() - self._heap[0].due_ns)

    def recent_max_lateness_ns(self, window_ns: int) -> int:
        cutoff = self.now_ns() - window_ns
        worst = 0
        for t, lateness in self.lateness_samples:
            if t >= cutoff and lateness > worst:
                worst = lateness
        return worst

    def clear_lateness_samples(self) -> None:
        self.lateness_samples.clear()

    def pending(self) -> int:
        with self._lock:
            return sum(1 for ev in self._heap if not ev.cancelled)

    # -- run ---------------------------------------------------------------

    def stop(self) -> None:
        self._stopped = True

    def run(self, until_ns: Optional[int] = None) -> None:
        """Dispatch events in (due, seq) order until stop() or exhaustion."""
        self._running = True
        self._stopped = False
        try:
            while not self._stopped:
                ev = self._next_event(until_ns)
                if ev is None:
                    break
                now = self.now_ns()
                lateness = max(0, now - ev.due_ns)
                self.dispatch_lateness_ns = lateness
                self.lateness_samples.append((now, lateness))
                if lateness > self.max_lateness_ns:
                    self.max_lateness_ns = lateness
                self.n_dispatched += 1
                if lateness > 0 and self.late_drop_policy is not None:
                    if self.late_drop_policy(ev, lateness):
                        continue
                try:
                    ev.fn(*ev.args)
                except Exception:
                    self.n_errors += 1
                    log.exception("event %s (kind=%r) raised", ev.seq, ev.kind)
        finally:
            self._running = False

    def _next_event(self, until_ns: Optional[int]) -> Optional[Event]:
        while not self._stopped:
            with self._lock:
                while self._heap and self._heap[0].cancelled:
                    heapq.heappop(self._heap)
                head = self._heap[0] if self._heap else None
                if head is not None and (until_ns is None or head.due_ns <= until_ns):
                    if not self.realtime:
                        heapq.heappop(self._heap)
                        self._vnow_ns = max(self._vnow_ns, head.due_ns)
                        return head
                    if time.monotonic_ns() - self._origin_ns >= head.due_ns:
                        heapq.heappop(self._heap)
                        return head
                    wait_target = head.due_ns
                else:
                    if not self.realtime or until_ns is None:
                        return None
                    if self.now_ns() >= until_ns:
                        return None
                    wait_target = until_ns
            self._wait_towards(wait_target)
        return None

    def _wait_towards(self, due_ns: int) -> None:
        """Sleep one bounded chunk towards due_ns, then let caller re-peek."""
        rem = due_ns - self.now_ns()
        if rem <= 0:
            return
        if rem > _SLEEP_MARGIN_NS + _SPIN_BELOW_NS:
            time.sleep(min(rem - _SLEEP_MARGIN_NS, _MAX_BLIND_SLEEP_NS) / 1e9)
        elif rem > _SPIN_BELOW_NS:
            time.sleep(0)
        # below the spin threshold: return immediately; the caller's
        # re-peek loop acts as the spin
