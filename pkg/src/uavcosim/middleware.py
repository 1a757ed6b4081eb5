"""Synchronization layer between the application bus and the network layer.

Every application message crossing the bridge is wrapped into a packet,
stamped t0, and resolved by the network layer into a simulated network time
delta. The payload is then held back until t0 + delta:

    wait = delta + t0 - t1

where t1 is the clock when the network result became known. The network
layer computes transfers ahead of real time, so the wait branch is the normal
path; when the host falls behind (t1 > t0 + delta) the payload is released
immediately and the overshoot is recorded as lateness.

In freeze-assist mode a monitor watches executed-event lateness and freezes
the vehicle side when the loop falls behind by more than the threshold,
resuming once the backlog drains. Freeze and resume are broadcast on a
control topic so every consumer sees the same transition.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from .bus import Bus, Envelope, Subscription
from .flightsim import Telemetry
from .geo import GeoPos, to_local
from .kernel import EventLoop
from .netsim.core import AP_NODE, NetSim, Packet, SchedulerMode, uav_node_id

log = logging.getLogger(__name__)

FREEZE_TOPIC = "sys/freeze"
METRICS_TOPIC = "sys/metrics"

DEFAULT_FREEZE_NS = 50_000_000
DEFAULT_RESUME_NS = 10_000_000
MONITOR_PERIOD_NS = 20_000_000
MONITOR_WINDOW_NS = 200_000_000
METRICS_PERIOD_NS = 500_000_000


@dataclass
class Route:
    """One ingress topic -> one logical stream over one interface."""
    stream_id: str
    kind: str            # "control" | "telemetry" | "frames"
    src_node: int
    dst_node: int
    iface: str
    delivery_topic: str
    uav_id: Optional[int] = None   # for telemetry position sync


@dataclass
class StreamStats:
    sent: int = 0
    delivered: int = 0
    dropped: Counter = field(default_factory=Counter)
    in_flight: int = 0
    deltas_ns: list = field(default_factory=list)
    lateness_ns: list = field(default_factory=list)

    def dropped_total(self) -> int:
        return sum(self.dropped.values())


class Middleware:
    def __init__(self, loop: EventLoop, bus: Bus, netsim: NetSim,
                 origin: GeoPos, trace_delay: Callable = None,
                 freeze_ns: int = DEFAULT_FREEZE_NS,
                 resume_ns: int = DEFAULT_RESUME_NS):
        self.loop = loop
        self.bus = bus
        self.netsim = netsim
        self.origin = origin
        self.trace_delay = trace_delay
        self.freeze_ns = freeze_ns
        self.resume_ns = resume_ns
        self.routes: dict[str, Route] = {}
        self.ledger: dict[int, Packet] = {}
        self.stats: dict[str, StreamStats] = {}
        self.frozen = False
        self.freeze_events: list[dict] = []
        self._t_freeze_ns = 0
        self._freeze_cbs: list[tuple[Callable, Callable]] = []
        self._endpoint = bus.endpoint("middleware")
        self._north: Optional[Subscription] = None
        self._south: Optional[Subscription] = None
        self._metric_mark: dict[str, int] = {}
        netsim.on_complete = self._on_complete
        netsim.on_drop = self._on_drop

    # -- wiring ---------------------------------------------------------------

    def add_route(self, ingress_topic: str, route: Route):
        if ingress_topic in self.routes:
            raise ValueError(f"duplicate route for topic {ingress_topic!r}")
        self.routes[ingress_topic] = route
        self.stats.setdefault(route.stream_id, StreamStats())

    def start(self):
        """Attach the bridges; call once the bus topology is registered."""
        self._north = self.bus.subscribe("uav")
        self._north.set_waker(self._wake)
        self._south = self.bus.subscribe("gcs")
        self._south.set_waker(self._wake)

    def _wake(self):
        self.loop.call_soon(self._pump, kind="bridge-pump")

    def _pump(self):
        for sub in (self._north, self._south):
            if sub is None:
                continue
            for env in sub.drain():
                self._ingress(env)

    def register_freeze_hooks(self, freeze_fn: Callable[[], None],
                              resume_fn: Callable[[int], None]):
        self._freeze_cbs.append((freeze_fn, resume_fn))

    def start_monitor(self):
        """Periodic lateness watch; only meaningful in real-time runs."""
        if self.netsim.mode is SchedulerMode.FREEZE_ASSIST and self.loop.realtime:
            self.loop.call_after(MONITOR_PERIOD_NS, self._monitor,
                                 kind="sync-monitor")

    def start_metrics(self):
        self.loop.call_after(METRICS_PERIOD_NS, self._metrics, kind="sync-metrics")

    # -- ingress: bus -> network ------------------------------------------------

    def _ingress(self, env: Envelope):
        route = self.routes.get(env.topic)
        if route is None:
            return  # not bridged (local-only topic)
        if route.kind == "telemetry" and route.uav_id is not None:
            self._sync_position(route.uav_id, env.payload)
        pkt = Packet(stream_id=route.stream_id, seq=env.seq,
                     size_bytes=len(env.payload), src_node=route.src_node,
                     dst_node=route.dst_node, iface=route.iface,
                     t0_ns=self.loop.now_ns(), ctx=env)
        pkt.delivery_topic = route.delivery_topic
        self.ledger[id(pkt)] = pkt
        self.stats[pkt.stream_id].sent += 1
        self.netsim.transmit(pkt)

    def _sync_position(self, uav_id: int, payload: bytes):
        """Mirror reported position into the network topology.

        Applied before the packet is submitted, so the transfer sees the
        position that generated it.
        """
        try:
            tel = Telemetry.from_payload(payload)
            pos = to_local(self.origin, GeoPos(tel.lat, tel.lon, 0.0))
            pos = type(pos)(pos.x, pos.y, tel.alt_m)
        except (ValueError, KeyError) as e:
            log.warning("unparseable telemetry for uav %d: %s", uav_id, e)
            return
        self.netsim.set_position(uav_node_id(uav_id), pos)

    # -- egress: network -> bus ---------------------------------------------------

    def _on_complete(self, pkt: Packet):
        t1 = self.loop.now_ns()
        due = pkt.t0_ns + pkt.delta_ns
        if t1 < due:
            self.loop.call_at(due, self._release, pkt,
                              kind="net-release", ctx=pkt)
        else:
            self._release(pkt)

    def _release(self, pkt: Packet):
        t_release = self.loop.now_ns()
        due = pkt.t0_ns + pkt.delta_ns
        lateness = max(0, t_release - due)
        self.ledger.pop(id(pkt), None)
        st = self.stats[pkt.stream_id]
        st.delivered += 1
        st.deltas_ns.append(pkt.delta_ns)
        st.lateness_ns.append(lateness)
        env: Envelope = pkt.ctx
        self._endpoint.publish(pkt.delivery_topic, env.payload,
                               stream_id=pkt.stream_id)
        if self.trace_delay is not None:
            self.trace_delay(pkt.stream_id, pkt.seq, pkt.t0_ns, pkt.delta_ns,
                             t_release, lateness, pkt.hops, False, "")

    def _on_drop(self, pkt: Packet):
        self.ledger.pop(id(pkt), None)
        st = self.stats[pkt.stream_id]
        st.dropped[pkt.reason] += 1
        log.debug("stream %s seq %d dropped: %s", pkt.stream_id, pkt.seq,
                  pkt.reason)
        if self.trace_delay is not None:
            self.trace_delay(pkt.stream_id, pkt.seq, pkt.t0_ns, pkt.delta_ns,
                             pkt.t0_ns + pkt.delta_ns, 0, pkt.hops, True,
                             pkt.reason or "")

    # -- freeze control ---------------------------------------------------------

    def _monitor(self):
        if not self.frozen:
            sig = self.loop.recent_max_lateness_ns(MONITOR_WINDOW_NS)
            if sig > self.freeze_ns:
                self._freeze(sig)
        else:
            backlog = self.loop.backlog_lateness_ns()
            if backlog < self.resume_ns:
                self._resume()
        self.loop.call_after(MONITOR_PERIOD_NS, self._monitor, kind="sync-monitor")

    def _freeze(self, sig_ns: int):
        self.frozen = True
        self._t_freeze_ns = self.loop.now_ns()
        log.info("freezing vehicle side: lateness %.1f ms", sig_ns / 1e6)
        for freeze_fn, _ in self._freeze_cbs:
            freeze_fn()
        self._endpoint.publish(FREEZE_TOPIC, json.dumps(
            {"state": "frozen", "t_ns": self._t_freeze_ns}).encode())

    def _resume(self):
        t = self.loop.now_ns()
        pause = t - self._t_freeze_ns
        self.frozen = False
        self.loop.clear_lateness_samples()
        for _, resume_fn in self._freeze_cbs:
            resume_fn(pause)
        self.freeze_events.append({"t_ns": self._t_freeze_ns,
                                   "duration_ns": pause})
        log.info("resumed after %.1f ms pause", pause / 1e6)
        self._endpoint.publish(FREEZE_TOPIC, json.dumps(
            {"state": "active", "t_ns": t, "pause_ns": pause}).encode())

    # -- metrics / report ---------------------------------------------------------

    def _metrics(self):
        t = self.loop.now_ns()
        for sid, st in self.stats.items():
            mark = self._metric_mark.get(sid, 0)
            window = st.deltas_ns[mark:]
            self._metric_mark[sid] = len(st.deltas_ns)
            if window:
                self._endpoint.publish(METRICS_TOPIC, json.dumps(
                    {"name": "delay_ms", "stream": sid, "t_ns": t,
                     "value": sum(window) / len(window) / 1e6}).encode())
        for node_id, node in self.netsim.nodes.items():
            if "wifi" in node.ifaces and node_id >= 10 and self.netsim.wifi:
                rss = self.netsim._mean_rss(self.netsim.wifi_tx_dbm, node_id,
                                            AP_NODE, self.netsim.wifi_chan)
                self._endpoint.publish(METRICS_TOPIC, json.dumps(
                    {"name": "rss_dbm", "node": node.name, "t_ns": t,
                     "value": rss}).encode())
        self.loop.call_after(METRICS_PERIOD_NS, self._metrics, kind="sync-metrics")

    def finalize(self) -> dict:
        """Drain bookkeeping at end of run; returns per-stream summary."""
        for pkt in self.ledger.values():
            self.stats[pkt.stream_id].in_flight += 1
        self.ledger.clear()
        out = {}
        for sid, st in sorted(self.stats.items()):
            d = sorted(st.deltas_ns)
            lat = sorted(st.lateness_ns)
            out[sid] = {
                "sent": st.sent,
                "delivered": st.delivered,
                "dropped": dict(st.dropped),
                "dropped_total": st.dropped_total(),
                "in_flight": st.in_flight,
                "delay_ms_mean": (sum(d) / len(d) / 1e6) if d else None,
                "delay_ms_p50": _pct(d, 0.50),
                "delay_ms_p99": _pct(d, 0.99),
                "lateness_ms_p99": _pct(lat, 0.99),
                "lateness_ms_max": (lat[-1] / 1e6) if lat else None,
            }
        return out


def _pct(sorted_ns: list, q: float) -> Optional[float]:
    if not sorted_ns:
        return None
    idx = min(len(sorted_ns) - 1, int(q * (len(sorted_ns) - 1) + 0.5))
    return sorted_ns[idx] / 1e6
