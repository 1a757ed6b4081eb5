"""Assemble a parsed scenario into a runnable world."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from ..bus import Bus
from ..flightsim import Fleet, UavParams
from ..gcs import FrameSink, FrameSource, GroundStation
from ..gcs.frames import FrameProfile
from ..geo import GeoPos, LocalXY, to_local
from ..kernel import EventLoop
from ..middleware import Middleware, Route
from ..netsim.core import (AP_NODE, ENB_NODE, GCS_NODE, NetSim, SchedulerMode,
                           uav_node_id)
from ..netsim.wifi import WifiParams
from ..report import TraceRecorder
from .config import ScenarioCfg, endpoint_uav_id
from .tasks import ControlPinger, UavTask

log = logging.getLogger(__name__)

_MS = 1_000_000


@dataclass
class World:
    cfg: ScenarioCfg
    loop: EventLoop
    bus: Bus
    origin: GeoPos
    fleet: Fleet
    netsim: NetSim
    middleware: Middleware
    gcs: GroundStation
    recorder: TraceRecorder
    uav_tasks: dict = field(default_factory=dict)
    pingers: list = field(default_factory=list)
    frame_sources: dict = field(default_factory=dict)
    frame_sink: Optional[FrameSink] = None


def build_world(cfg: ScenarioCfg, recorder: TraceRecorder,
                realtime: bool = True) -> World:
    loop = EventLoop(realtime=realtime)
    bus = Bus(clock=loop.now_ns)
    origin = cfg.sim.origin or GeoPos(cfg.uavs[0].home.lat,
                                      cfg.uavs[0].home.lon, 0.0)
    mode = SchedulerMode(cfg.sim.sync_mode)
    netsim = NetSim(loop, seed=cfg.sim.seed, mode=mode,
                    hard_limit_ns=int(cfg.sim.hard_limit_ms * _MS))
    netsim.trace_rss = recorder.rss_row

    netsim.add_node(GCS_NODE, "gcs", LocalXY(0.0, 0.0, 0.0))
    if cfg.wifi is not None:
        netsim.add_node(AP_NODE, "ap", LocalXY(*cfg.wifi.ap_pos))
        netsim.configure_wifi(cfg.wifi.params, cfg.wifi.channel,
                              tx_dbm=cfg.wifi.tx_dbm)
    if cfg.lte is not None:
        netsim.add_node(ENB_NODE, "enb", LocalXY(*cfg.lte.enb_pos))
        netsim.configure_lte(cfg.lte.params, cfg.lte.channel,
                             ue_tx_dbm=cfg.lte.ue_tx_dbm)
    if cfg.d2d is not None:
        mac = cfg.wifi.params if cfg.wifi is not None else WifiParams()
        netsim.configure_d2d(mac, cfg.d2d.channel, tx_dbm=cfg.d2d.tx_dbm)

    fleet = Fleet(origin)
    params = UavParams(tick_ms=cfg.sim.tick_ms)
    for u in cfg.uavs:
        fleet.spawn(u.uav_id, u.home, params, clock=loop.now_ns)
        node_id = uav_node_id(u.uav_id)
        netsim.add_node(node_id, f"uav:{u.uav_id}", to_local(origin, u.home))
        if "wifi" in u.ifaces:
            netsim.attach_wifi(node_id)
        if "lte" in u.ifaces:
            netsim.attach_lte(node_id)
        if "d2d" in u.ifaces:
            netsim.attach_d2d(node_id)

    middleware = Middleware(loop, bus, netsim, origin,
                            trace_delay=recorder.delay_row)
    gcs = GroundStation(loop, bus)
    world = World(cfg=cfg, loop=loop, bus=bus, origin=origin, fleet=fleet,
                  netsim=netsim, middleware=middleware, gcs=gcs,
                  recorder=recorder)

    telemetry_stream: dict[int, str] = {}
    cmd_route_claimed: set[int] = set()
    for s in cfg.streams:
        uid = endpoint_uav_id(s.src if s.src != "gcs" else s.dst)
        node = uav_node_id(uid)
        if s.kind == "control":
            if uid not in cmd_route_claimed:
                cmd_route_claimed.add(uid)
                middleware.add_route(f"gcs/cmd/{uid}", Route(
                    stream_id=s.name, kind="control", src_node=GCS_NODE,
                    dst_node=node, iface=s.iface,
                    delivery_topic=f"net/uav/{uid}/cmd"))
            middleware.add_route(f"gcs/ctrl/{uid}/{s.name}", Route(
                stream_id=s.name, kind="control", src_node=GCS_NODE,
                dst_node=node, iface=s.iface,
                delivery_topic=f"net/uav/{uid}/ctrl"))
            world.pingers.append(ControlPinger(
                loop, gcs.endpoint, f"gcs/ctrl/{uid}/{s.name}", s.name,
                s.rate_hz, s.payload_bytes))
        elif s.kind == "telemetry":
            if uid in telemetry_stream:
                raise ValueError(f"uav:{uid} has two telemetry streams "
                                 f"({telemetry_stream[uid]!r}, {s.name!r})")
            telemetry_stream[uid] = s.name
            middleware.add_route(f"uav/{uid}/telemetry", Route(
                stream_id=s.name, kind="telemetry", src_node=node,
                dst_node=GCS_NODE, iface=s.iface,
                delivery_topic=f"net/gcs/telemetry/{uid}", uav_id=uid))
        elif s.kind == "frames":
            topic = f"uav/{uid}/frames/{s.name}"
            middleware.add_route(topic, Route(
                stream_id=s.name, kind="frames", src_node=node,
                dst_node=GCS_NODE, iface=s.iface,
                delivery_topic=f"net/gcs/frames/{s.name}"))

    for u in cfg.uavs:
        task = UavTask(loop, bus, fleet.get(u.uav_id),
                       tick_ns=cfg.sim.tick_ms * _MS,
                       telemetry_stream=telemetry_stream.get(u.uav_id, ""))
        world.uav_tasks[u.uav_id] = task
        middleware.register_freeze_hooks(task.freeze, task.resume)
        if u.mission:
            gcs.add_mission(u.uav_id, [dict(kind=st.kind, **st.fields)
                                       for st in u.mission])

    for s in cfg.streams:
        if s.kind != "frames":
            continue
        uid = endpoint_uav_id(s.src)
        src = FrameSource(loop, world.uav_tasks[uid].endpoint,
                          f"uav/{uid}/frames/{s.name}", s.name,
                          FrameProfile(fps=s.frames.fps, gop=s.frames.gop,
                                       i_bytes=s.frames.i_bytes,
                                       p_bytes=s.frames.p_bytes,
                                       frag_bytes=s.frames.frag_bytes))
        world.frame_sources[s.name] = src
        middleware.register_freeze_hooks(src.freeze, src.resume)
    if world.frame_sources:
        world.frame_sink = FrameSink(loop, bus, trace_frame=recorder.frame_row)

    # initial topology rows for the position trace
    for u in cfg.uavs:
        netsim.set_position(uav_node_id(u.uav_id), to_local(origin, u.home))
    return world
