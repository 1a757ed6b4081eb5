"""In-process many-to-many publish/subscribe bus.

Topics are slash-delimited paths; subscriptions filter by segment-aligned
prefix ("uav/3" matches "uav/3/telemetry" but not "uav/30/x").  Every
delivered envelope carries four stamps taken on the way through:

    t_pub_send -> t_enq -> t_deq -> t_sub_recv

so the end-to-end transport delay decomposes exactly into a publish, a
queueing and a reception component.  Publish never blocks: each
subscription owns a bounded queue and overflow drops the oldest entry.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

DEFAULT_QUEUE_CAPACITY = 10_000
DEFAULT_PAIR_CAPACITY = 80


class BusError(Exception):
    pass


class InvalidTopicError(BusError):
    pass


class ClosedEndpointError(BusError):
    pass


class SubscriptionClosedError(BusError):
    pass


class CapacityError(BusError):
    """Raised when the configured publisher/subscriber pair budget is hit."""


def validate_topic(path: str) -> str:
    if not path or path.startswith("/") or path.endswith("/") or "//" in path:
        raise InvalidTopicError(f"invalid topic {path!r}")
    return path


def validate_prefix(prefix: str) -> str:
    # "" is the root wildcard; anything else must be a valid topic path
    if prefix == "":
        return prefix
    return validate_topic(prefix)


def prefix_matches(prefix: str, topic: str) -> bool:
    """Segment-aligned prefix test."""
    if prefix == "":
        return True
    if not topic.startswith(prefix):
        return False
    return len(topic) == len(prefix) or topic[len(prefix)] == "/"


@dataclass
class Envelope:
    """One delivered message. Instances are per-subscription copies; the
    payload bytes object is shared and must not be mutated."""

    topic: str
    payload: bytes
    seq: int
    src_id: str
    stream_id: str
    t_pub_send: int
    t_enq: int = 0
    t_deq: int = 0
    t_sub_recv: int = 0

    def delay_sample(self) -> "BusDelaySample":
        d_pub = self.t_enq - self.t_pub_send
        d_q = self.t_deq - self.t_enq
        d_sub = self.t_sub_recv - self.t_deq
        return BusDelaySample(d_pub, d_q, d_sub, d_pub + d_q + d_sub)


@dataclass(frozen=True)
class BusDelaySample:
    d_pub_ns: int
    d_q_ns: int
    d_sub_ns: int
    d_ze2e_ns: int


class Subscription:
    """Receiving side of a prefix subscription.

    Consumed by exactly one task at a time.  ``poll`` blocks until the
    deadline only when the bus clock is the wall clock; in-simulation
    consumers should call ``drain`` and rely on an enqueue waker instead.
    """

    def __init__(self, bus: "Bus", prefix: str, capacity: int):
        self.bus = bus
        self.prefix = prefix
        self.capacity = capacity
        self._q: list[Envelope] = []
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._closed = False
        self.dropped = 0
        self._waker: Optional[Callable[[], None]] = None

    def set_waker(self, fn: Optional[Callable[[], None]]) -> None:
        self._waker = fn

    def _offer(self, env: Envelope) -> None:
        waker = None
        with self._cond:
            if self._closed:
                return
            if len(self._q) >= self.capacity:
                del self._q[0]
                self.dropped += 1
            self._q.append(env)
            self._cond.notify()
            waker = self._waker
        if waker is not None:
            waker()

    def poll(self, deadline_ns: int) -> list[Envelope]:
        """Return all queued envelopes, waiting until deadline if empty."""
        clock = self.bus.clock
        with self._cond:
            if self._closed:
                raise SubscriptionClosedError("subscription cancelled")
            while not self._q:
                remaining = deadline_ns - clock()
                if remaining <= 0:
                    return []
                self._cond.wait(remaining / 1e9)
                if self._closed:
                    raise SubscriptionClosedError("subscription cancelled")
            batch = self._q
            self._q = []
        out = []
        for env in batch:
            env.t_deq = clock()
            out.append(env)
        t_recv = clock()
        for env in out:
            env.t_sub_recv = t_recv
        return out

    def drain(self) -> list[Envelope]:
        """Non-blocking poll (deadline = now)."""
        return self.poll(self.bus.clock())

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._q.clear()
            self._cond.notify_all()
        self.bus._remove_subscription(self)

    @property
    def closed(self) -> bool:
        return self._closed


class Endpoint:
    """Publishing side. Assigns a monotonically increasing seq per topic."""

    def __init__(self, bus: "Bus", endpoint_id: str):
        self.bus = bus
        self.endpoint_id = endpoint_id
        self._seq: dict[str, int] = {}
        self._lock = threading.Lock()
        self._closed = False

    def publish(self, topic: str, payload: bytes, stream_id: str = "") -> int:
        """Publish, returning the number of subscriptions matched."""
        if self._closed:
            raise ClosedEndpointError(f"endpoint {self.endpoint_id} closed")
        validate_topic(topic)
        with self._lock:
            seq = self._seq.get(topic, 0) + 1
            self._seq[topic] = seq
        return self.bus._dispatch(topic, payload, seq, self.endpoint_id, stream_id)

    def close(self) -> None:
        self._closed = True
        self.bus._remove_endpoint(self)

    @property
    def closed(self) -> bool:
        return self._closed


class Bus:
    """Topic registry and fan-out. All methods are thread-safe."""

    def __init__(self, clock: Callable[[], int] = time.monotonic_ns,
                 queue_capacity: int = DEFAULT_QUEUE_CAPACITY):
        self.clock = clock
        self.queue_capacity = queue_capacity
        self._lock = threading.Lock()
        self._subs: list[Subscription] = []
        self._endpoints: list[Endpoint] = []

    def endpoint(self, endpoint_id: str) -> Endpoint:
        ep = Endpoint(self, endpoint_id)
        with self._lock:
            self._endpoints.append(ep)
        return ep

    def subscribe(self, prefix: str, capacity: Optional[int] = None) -> Subscription:
        validate_prefix(prefix)
        sub = Subscription(self, prefix, capacity or self.queue_capacity)
        with self._lock:
            self._subs.append(sub)
        return sub

    def _dispatch(self, topic: str, payload: bytes, seq: int, src_id: str,
                  stream_id: str) -> int:
        t_pub_send = self.clock()
        with self._lock:
            targets = [s for s in self._subs if prefix_matches(s.prefix, topic)]
        n = 0
        for sub in targets:
            env = Envelope(topic=topic, payload=payload, seq=seq, src_id=src_id,
                           stream_id=stream_id, t_pub_send=t_pub_send)
            env.t_enq = self.clock()
            sub._offer(env)
            n += 1
        return n

    def _remove_subscription(self, sub: Subscription) -> None:
        with self._lock:
            if sub in self._subs:
                self._subs.remove(sub)

    def _remove_endpoint(self, ep: Endpoint) -> None:
        with self._lock:
            if ep in self._endpoints:
                self._endpoints.remove(ep)
