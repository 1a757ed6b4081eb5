"""Discrete-event network layer bound to the shared event loop.

Topology is a set of nodes (ground station, access point, LTE cell, vehicles,
interferers) in the local meter frame. Transfers are submitted per packet and
resolved immediately against the per-technology models (wifi.py, lte.py); the
completion callback fires right away with the computed finish time, and the
caller decides when to surface the payload (see middleware.py). Positions are
read at submission time; moving a node never rewrites packets already in
flight.

Node ids are small ints (0 = ground station, 1 = access point, 2 = LTE cell,
10+k = vehicle k, 1000+j = interferer j); names are only for traces.
"""

from __future__ import annotations

import enum
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..geo import LocalXY
from ..kernel import EventLoop
from . import channel as chan
from .channel import ChannelParams
from .d2d import min_hop_path
from .lte import LteCell, LteParams
from .wifi import DcfChannel, WifiParams, rate_for_rss

log = logging.getLogger(__name__)

GCS_NODE = 0
AP_NODE = 1
ENB_NODE = 2
UAV_NODE_BASE = 10
INTERFERER_NODE_BASE = 1000


def uav_node_id(uav_id: int) -> int:
    return UAV_NODE_BASE + uav_id


class SchedulerMode(enum.Enum):
    BEST_EFFORT = "besteffort"
    HARD_LIMIT = "hardlimit"
    FREEZE_ASSIST = "freezeassist"


class NetConfigError(ValueError):
    pass


@dataclass
class NetNode:
    node_id: int
    name: str
    pos: LocalXY
    ifaces: set = field(default_factory=set)
    # paced interferer config, None for regular nodes
    pace_rate_mbps: Optional[float] = None
    pace_bytes: int = 1000
    vel: Optional[tuple] = None


@dataclass
class Packet:
    stream_id: str
    seq: int
    size_bytes: int
    src_node: int
    dst_node: int
    iface: str                    # "wifi" | "lte" | "d2d"
    t0_ns: int = 0                # stamped at ingress
    delta_ns: int = 0             # simulated network time
    hops: list = field(default_factory=list)
    reason: Optional[str] = None  # drop reason
    ctx: object = None            # opaque payload reference
    delivery_topic: str = ""


class NetSim:
    def __init__(self, loop: EventLoop, seed: int = 0,
                 mode: SchedulerMode = SchedulerMode.FREEZE_ASSIST,
                 hard_limit_ns: int = 50_000_000):
        self.loop = loop
        self.mode = mode
        self.hard_limit_ns = hard_limit_ns
        self.nodes: dict[int, NetNode] = {}
        self.wifi: Optional[DcfChannel] = None
        self.wifi_params = WifiParams()
        self.wifi_chan = ChannelParams()
        self.wifi_tx_dbm = 16.0
        self.d2d: Optional[DcfChannel] = None
        self.d2d_chan = ChannelParams()
        self.d2d_tx_dbm = 16.0
        self.lte: Optional[LteCell] = None
        self.lte_params = LteParams()
        self.lte_chan = ChannelParams()
        self.lte_ue_tx_dbm = 23.0
        self.lte_ues: set = set()
        # callbacks installed by the sync layer
        self.on_complete: Callable[[Packet], None] = lambda pkt: None
        self.on_drop: Callable[[Packet], None] = lambda pkt: None
        self.trace_rss: Optional[Callable] = None
        self._rng_fading = random.Random(f"{seed}:fading")
        self._rng_mac = random.Random(f"{seed}:mac")
        self._rng_lte = random.Random(f"{seed}:lte")
        if mode is SchedulerMode.HARD_LIMIT:
            loop.late_drop_policy = self._hard_limit_policy

    # -- topology -----------------------------------------------------------

    def add_node(self, node_id: int, name: str, pos: LocalXY) -> NetNode:
        if node_id in self.nodes:
            raise NetConfigError(f"duplicate node id {node_id}")
        node = NetNode(node_id, name, pos)
        self.nodes[node_id] = node
        return node

    def configure_wifi(self, params: WifiParams, chan_params: ChannelParams,
                       tx_dbm: float = 16.0):
        if AP_NODE not in self.nodes:
            raise NetConfigError("add the access point node before configure_wifi")
        self.wifi_params = params
        self.wifi_chan = chan_params
        self.wifi_tx_dbm = tx_dbm
        self.wifi = DcfChannel(params, self._rng_mac, name="wifi")
        self.wifi.add_station(AP_NODE)

    def configure_d2d(self, params: WifiParams, chan_params: ChannelParams,
                      tx_dbm: float):
        self.d2d_chan = chan_params
        self.d2d_tx_dbm = tx_dbm
        self.d2d = DcfChannel(params, self._rng_mac, name="d2d")

    def configure_lte(self, params: LteParams, chan_params: ChannelParams,
                      ue_tx_dbm: float = 23.0):
        if ENB_NODE not in self.nodes:
            raise NetConfigError("add the cell node before configure_lte")
        self.lte_params = params
        self.lte_chan = chan_params
        self.lte_ue_tx_dbm = ue_tx_dbm
        self.lte = LteCell(params, self._rng_lte)

    def attach_wifi(self, node_id: int):
        if self.wifi is None:
            raise NetConfigError("wifi not configured")
        self.nodes[node_id].ifaces.add("wifi")
        if node_id != AP_NODE:
            self.wifi.add_station(node_id)

    def attach_d2d(self, node_id: int):
        if self.d2d is None:
            raise NetConfigError("d2d not configured")
        self.nodes[node_id].ifaces.add("d2d")
        self.d2d.add_station(node_id)

    def attach_lte(self, node_id: int):
        if self.lte is None:
            raise NetConfigError("lte not configured")
        if len(self.lte_ues) + 1 > self.lte_params.max_ue:
            raise NetConfigError(
                f"cell supports at most {self.lte_params.max_ue} attached devices")
        self.nodes[node_id].ifaces.add("lte")
        self.lte_ues.add(node_id)

    def add_interferer(self, idx: int, pos: LocalXY, rate_mbps: float,
                       pkt_bytes: int = 1000, vel: tuple = None) -> int:
        node_id = INTERFERER_NODE_BASE + idx
        node = self.add_node(node_id, f"intf:{idx}", pos)
        node.pace_rate_mbps = rate_mbps
        node.pace_bytes = pkt_bytes
        node.vel = vel
        self._refresh_interferer(node)
        return node_id

    def remove_interferer(self, node_id: int):
        node = self.nodes.pop(node_id, None)
        if node is None:
            return
        if self.wifi is not None and self.wifi.has_station(node_id):
            self.wifi.remove_station(node_id)

    def _refresh_interferer(self, node: NetNode):
        """Join or leave the collision domain on carrier-sense range."""
        if self.wifi is None:
            return
        ap = self.nodes[AP_NODE]
        mean_rss = chan.rss_dbm(self.wifi_tx_dbm, node.pos.dist(ap.pos),
                                self.wifi_chan)
        in_range = mean_rss >= self.wifi_params.sensitivity_dbm
        have = self.wifi.has_station(node.node_id)
        if in_range and not have:
            phy = rate_for_rss(mean_rss, self.wifi_params) or 6.0
            self.wifi.add_station(node.node_id,
                                  pace_rate_mbps=node.pace_rate_mbps,
                                  pace_bytes=node.pace_bytes,
                                  phy_rate_mbps=phy)
        elif not in_range and have:
            self.wifi.remove_station(node.node_id)

    def set_position(self, node_id: int, pos: LocalXY):
        node = self.nodes[node_id]
        node.pos = pos
        if node.pace_rate_mbps is not None:
            self._refresh_interferer(node)
        if self.trace_rss is not None:
            t = self.loop.now_ns()
            if "wifi" in node.ifaces and self.wifi is not None:
                self.trace_rss(t, node.name, self.nodes[AP_NODE].name,
                               self._mean_rss(self.wifi_tx_dbm, node_id, AP_NODE,
                                              self.wifi_chan), pos)
            if "lte" in node.ifaces and self.lte is not None:
                self.trace_rss(t, node.name, self.nodes[ENB_NODE].name,
                               self._mean_rss(self.lte_ue_tx_dbm, node_id, ENB_NODE,
                                              self.lte_chan), pos)

    def _mean_rss(self, tx_dbm: float, a: int, b: int,
                  chan_params: ChannelParams) -> float:
        d = self.nodes[a].pos.dist(self.nodes[b].pos)
        return chan.rss_dbm(tx_dbm, d, chan_params)

    def _link_rss(self, tx_dbm: float, a: int, b: int,
                  chan_params: ChannelParams) -> float:
        """Per-packet RSS including a fading draw."""
        d = self.nodes[a].pos.dist(self.nodes[b].pos)
        return chan.rss_dbm(tx_dbm, d, chan_params, self._rng_fading)

    # -- transfers ------------------------------------------------------------

    def transmit(self, pkt: Packet):
        """Resolve one packet; invokes on_complete or on_drop exactly once."""
        t = self.loop.now_ns()
        pkt.t0_ns = pkt.t0_ns or t
        try:
            if pkt.iface == "wifi":
                self._transmit_wifi(pkt, t)
            elif pkt.iface == "lte":
                self._transmit_lte(pkt, t)
            elif pkt.iface == "d2d":
                self._transmit_d2d(pkt, t)
            else:
                raise NetConfigError(f"packet on unknown iface {pkt.iface!r}")
        except (KeyError, AttributeError) as e:
            raise NetConfigError(
                f"stream {pkt.stream_id!r} references missing topology: {e}") from e

    def _finish(self, pkt: Packet, done_ns: int, reason: Optional[str]):
        pkt.delta_ns = done_ns - pkt.t0_ns
        if reason is None:
            self.on_complete(pkt)
        else:
            pkt.reason = reason
            self.on_drop(pkt)

    def _air_leg(self, pkt: Packet) -> tuple[int, int]:
        """(sender, receiver) for the over-the-air wifi hop via the AP."""
        if pkt.src_node == GCS_NODE:   # downlink: AP transmits
            return AP_NODE, pkt.dst_node
        return pkt.src_node, AP_NODE   # uplink

    def _transmit_wifi(self, pkt: Packet, t: int):
        sender, receiver = self._air_leg(pkt)
        rss = self._link_rss(self.wifi_tx_dbm, sender, receiver, self.wifi_chan)
        rate = rate_for_rss(rss, self.wifi_params)
        pkt.hops = [pkt.src_node, AP_NODE, pkt.dst_node]
        if pkt.src_node == AP_NODE or pkt.dst_node == AP_NODE:
            pkt.hops = [pkt.src_node, pkt.dst_node]
        if rate is None:
            self._finish(pkt, t, "no-link")
            return
        done, reason = self.wifi.submit(sender, pkt.size_bytes, rate, t)
        self._finish(pkt, done, reason)

    def _transmit_lte(self, pkt: Packet, t: int):
        ue = pkt.src_node if pkt.src_node in self.lte_ues else pkt.dst_node
        if ue not in self.lte_ues:
            self._finish(pkt, t, "no-attach")
            return
        rss = self._link_rss(self.lte_ue_tx_dbm, ue, ENB_NODE, self.lte_chan)
        sinr = chan.snr_db(rss, self.lte_chan)
        pkt.hops = [pkt.src_node, ENB_NODE, pkt.dst_node]
        done, reason = self.lte.transfer(ue, pkt.size_bytes, sinr,
                                         max(1, len(self.lte_ues)), t)
        self._finish(pkt, done, reason)

    def d2d_neighbors(self) -> dict:
        """Connectivity for relay routing: mean RSS against sensitivity.

        The access point reaches vehicles at infrastructure power; vehicles
        reach each other at the sidelink power. Fading affects per-hop rate,
        not topology, so routes are stable between position changes.
        """
        sens = self.wifi_params.sensitivity_dbm
        members = [AP_NODE] + sorted(
            n for n, node in self.nodes.items() if "d2d" in node.ifaces)
        adj: dict = {m: set() for m in members}
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                tx = self.wifi_tx_dbm if AP_NODE in (a, b) else self.d2d_tx_dbm
                if self._mean_rss(tx, a, b, self.d2d_chan) >= sens:
                    adj[a].add(b)
                    adj[b].add(a)
        return adj

    def _transmit_d2d(self, pkt: Packet, t: int):
        if self.d2d is None:
            raise NetConfigError("d2d not configured")
        # route between the AP and the far endpoint; the ground station side
        # is wired to the AP at zero cost
        far = pkt.dst_node if pkt.src_node == GCS_NODE else pkt.src_node
        adj = self.d2d_neighbors()
        path = min_hop_path(AP_NODE, far, adj)
        if path is None:
            pkt.hops = [pkt.src_node]
            self._finish(pkt, t, "no-route")
            return
        if pkt.src_node != GCS_NODE:
            path = list(reversed(path))     # vehicle -> ... -> AP
        hops = [GCS_NODE] + path if pkt.src_node == GCS_NODE else path + [GCS_NODE]
        pkt.hops = hops
        now = t
        for a, b in zip(path, path[1:]):
            if AP_NODE in (a, b):
                ch, tx, cp = self.wifi, self.wifi_tx_dbm, self.wifi_chan
            else:
                ch, tx, cp = self.d2d, self.d2d_tx_dbm, self.d2d_chan
            rss = self._link_rss(tx, a, b, cp)
            rate = rate_for_rss(rss, self.wifi_params)
            if rate is None:
                self._finish(pkt, now, "no-link")
                return
            sender = a
            if ch is self.wifi and not ch.has_station(sender):
                self._finish(pkt, now, "no-link")
                return
            done, reason = ch.submit(sender, pkt.size_bytes, rate, now)
            if reason is not None:
                self._finish(pkt, done, reason)
                return
            now = done
        self._finish(pkt, now, None)

    # -- background pacing ------------------------------------------------------

    def pace(self):
        """Advance channel-internal traffic to the present."""
        t = self.loop.now_ns()
        if self.wifi is not None:
            self.wifi.advance_to(t)
        if self.d2d is not None:
            self.d2d.advance_to(t)

    def step_mobility(self, dt_s: float):
        """Move interferers with a velocity; membership follows position."""
        for node in list(self.nodes.values()):
            if node.vel is not None and node.pace_rate_mbps is not None:
                vx, vy = node.vel
                self.set_position(node.node_id,
                                  LocalXY(node.pos.x + vx * dt_s,
                                          node.pos.y + vy * dt_s, node.pos.z))

    # -- scheduler policy ---------------------------------------------------------

    def _hard_limit_policy(self, event, lateness_ns: int) -> bool:
        if event.kind == "net-release" and lateness_ns > self.hard_limit_ns:
            pkt = event.ctx
            if isinstance(pkt, Packet):
                pkt.reason = "late"
                self.on_drop(pkt)
                return True
        return False
