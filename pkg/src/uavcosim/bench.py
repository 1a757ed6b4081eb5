"""Messaging-layer benchmark: per-stream delay decomposition under load.

Drives N concurrent publisher threads at a fixed rate and measures, per
message, the three legs of the end-to-end path (publish call, queue
residency, subscriber pickup). Two wirings:

    single    every stream multiplexed over one publisher/subscriber pair
    parallel  a dedicated pair per stream

The pair budget is enforced up front: asking for more concurrent pairs than
max_pairs raises CapacityError rather than degrading quietly.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .bus import Bus, CapacityError, DEFAULT_PAIR_CAPACITY

_NS = 1_000_000_000
MODES = ("single", "parallel")


@dataclass(frozen=True)
class BenchSample:
    stream_id: str
    seq: int
    d_pub_ns: int
    d_q_ns: int
    d_sub_ns: int
    d_ze2e_ns: int


@dataclass
class BenchSummary:
    mode: str
    n_streams: int
    payload_bytes: int
    rate_hz: float
    duration_s: float
    n_sent: int = 0
    n_received: int = 0
    n_dropped: int = 0
    mean_ze2e_ns: float = 0.0
    p50_ze2e_ns: int = 0
    p99_ze2e_ns: int = 0
    max_ze2e_ns: int = 0
    mean_pub_ns: float = 0.0
    mean_q_ns: float = 0.0
    mean_sub_ns: float = 0.0
    samples: list = field(default_factory=list)

    def per_stream_means_ns(self) -> dict:
        acc: dict = {}
        for s in self.samples:
            acc.setdefault(s.stream_id, []).append(s.d_ze2e_ns)
        return {k: sum(v) / len(v) for k, v in sorted(acc.items())}


def _publisher(endpoint, topic: str, stream_id: str, payload: bytes,
               rate_hz: float, duration_s: float, start_ns: int,
               counter: list):
    period = _NS / rate_hz
    end = start_ns + int(duration_s * _NS)
    k = 0
    sent = 0
    while True:
        due = start_ns + int(k * period)
        if due >= end:
            break
        while True:
            now = time.monotonic_ns()
            if now >= due:
                break
            time.sleep(min((due - now) / _NS, 0.002))
        endpoint.publish(topic, payload, stream_id=stream_id)
        sent += 1
        k += 1
    counter.append(sent)


def _consumer(sub, out: list, stop: threading.Event):
    while True:
        batch = sub.poll(time.monotonic_ns() + 50_000_000)
        for env in batch:
            d = env.delay_sample()
            out.append(BenchSample(env.stream_id, env.seq, d.d_pub_ns,
                                   d.d_q_ns, d.d_sub_ns, d.d_ze2e_ns))
        if not batch and stop.is_set():
            break


def bench_bus(n_streams: int, payload_bytes: int, mode: str,
              duration_s: float, rate_hz: float = 100.0,
              max_pairs: int = DEFAULT_PAIR_CAPACITY,
              keep_samples: bool = True) -> BenchSummary:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if n_streams < 1:
        raise ValueError("n_streams must be >= 1")
    n_pairs = 1 if mode == "single" else n_streams
    if n_pairs > max_pairs:
        raise CapacityError(
            f"{n_pairs} concurrent pairs exceed the budget of {max_pairs}")

    bus = Bus()
    payload = bytes((i * 131 + 17) % 256 for i in range(payload_bytes))
    subs = []
    if mode == "single":
        subs.append(bus.subscribe("bench"))
        endpoints = [bus.endpoint("bench-pub")] * n_streams
    else:
        endpoints = []
        for i in range(n_streams):
            subs.append(bus.subscribe(f"bench/{i}"))
            endpoints.append(bus.endpoint(f"bench-pub-{i}"))

    received: list = []
    stop = threading.Event()
    consumers = [threading.Thread(target=_consumer, args=(s, received, stop),
                                  daemon=True) for s in subs]
    for c in consumers:
        c.start()

    counters: list = []
    start_ns = time.monotonic_ns() + 50_000_000  # common aligned start
    pubs = [threading.Thread(
        target=_publisher,
        args=(endpoints[i], f"bench/{i}", f"s{i:03d}", payload, rate_hz,
              duration_s, start_ns, counters), daemon=True)
        for i in range(n_streams)]
    for p in pubs:
        p.start()
    for p in pubs:
        p.join()
    time.sleep(0.2)  # let queued messages flush
    stop.set()
    for c in consumers:
        c.join()

    dropped = sum(s.dropped for s in subs)
    for s in subs:
        s.close()

    summary = BenchSummary(mode=mode, n_streams=n_streams,
                           payload_bytes=payload_bytes, rate_hz=rate_hz,
                           duration_s=duration_s,
                           n_sent=sum(counters), n_received=len(received),
                           n_dropped=dropped)
    if received:
        ze2e = sorted(s.d_ze2e_ns for s in received)
        summary.mean_ze2e_ns = sum(ze2e) / len(ze2e)
        summary.p50_ze2e_ns = ze2e[int(0.50 * (len(ze2e) - 1) + 0.5)]
        summary.p99_ze2e_ns = ze2e[int(0.99 * (len(ze2e) - 1) + 0.5)]
        summary.max_ze2e_ns = ze2e[-1]
        summary.mean_pub_ns = sum(s.d_pub_ns for s in received) / len(received)
        summary.mean_q_ns = sum(s.d_q_ns for s in received) / len(received)
        summary.mean_sub_ns = sum(s.d_sub_ns for s in received) / len(received)
    if keep_samples:
        summary.samples = received
    return summary
