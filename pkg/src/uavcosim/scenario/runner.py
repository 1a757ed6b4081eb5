"""Run orchestration: schedule a built world, run it, collect the report."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

from ..geo import from_local
from ..report import TraceRecorder, build_report, write_report
from .build import World, build_world
from .config import ScenarioCfg

log = logging.getLogger(__name__)

_MS = 1_000_000
_S = 1_000_000_000

# short pace so no single callback inherits a long backlog of background
# traffic to simulate; keeps real-time dispatch lateness well under 1 ms
PACE_PERIOD_NS = 10 * _MS
END_RECHECK_NS = 20 * _MS


@dataclass(frozen=True)
class StallFault:
    """Blocks the loop once for duration_ms at at_s (real-time runs only)."""
    at_s: float
    duration_ms: float


@dataclass
class RunResult:
    report: dict
    out_dir: Optional[str]
    world: World


def prepare(cfg: ScenarioCfg, out_dir: str = None, realtime: bool = True,
            stall: StallFault = None) -> tuple[World, Callable[[], RunResult]]:
    """Build and schedule a run; the returned callable finishes it."""
    recorder = TraceRecorder(out_dir)
    world = build_world(cfg, recorder, realtime=realtime)
    loop = world.loop
    t_wall0 = time.monotonic()

    world.middleware.start()
    world.gcs.start()
    if world.frame_sink is not None:
        world.frame_sink.start()
    world.middleware.start_monitor()
    world.middleware.start_metrics()

    n = max(1, len(world.uav_tasks))
    tick_ns = cfg.sim.tick_ms * _MS
    for i, task in enumerate(world.uav_tasks.values()):
        task.start(t0_ns=(i * tick_ns) // n)
    for i, pinger in enumerate(world.pingers):
        pinger.start(t0_ns=i * _MS)
    for i, src in enumerate(world.frame_sources.values()):
        src.start(t0_ns=2 * _MS + i * _MS)
    world.gcs.start_missions()

    def _pace():
        world.netsim.pace()
        loop.call_after(PACE_PERIOD_NS, _pace, kind="net-pace")
    loop.call_after(PACE_PERIOD_NS, _pace, kind="net-pace")

    idx = 0
    any_mobile = False
    for entry in cfg.interferers:
        for k in range(entry.count):
            node_pos = type(world.netsim.nodes[0].pos)(
                entry.pos[0] + 1.5 * (k % 8), entry.pos[1] + 1.5 * (k // 8),
                entry.pos[2])
            my_idx = idx
            idx += 1
            if entry.vel is not None:
                any_mobile = True

            def _add(i=my_idx, p=node_pos, e=entry):
                world.netsim.add_interferer(i, p, e.rate_mbps, e.pkt_bytes,
                                            vel=e.vel)
            loop.call_at(int(entry.start_s * _S), _add, kind="intf-window")
            if entry.stop_s is not None:
                from ..netsim.core import INTERFERER_NODE_BASE

                def _rm(i=my_idx):
                    world.netsim.remove_interferer(INTERFERER_NODE_BASE + i)
                loop.call_at(int(entry.stop_s * _S), _rm, kind="intf-window")

    if any_mobile:
        def _mob():
            world.netsim.step_mobility(1.0)
            loop.call_after(_S, _mob, kind="intf-mobility")
        loop.call_after(_S, _mob, kind="intf-mobility")

    if stall is not None:
        if not realtime:
            raise ValueError("stall faults only make sense in real-time runs")

        def _stall():
            log.warning("injected stall: blocking %.0f ms", stall.duration_ms)
            time.sleep(stall.duration_ms / 1e3)
        loop.call_at(int(stall.at_s * _S), _stall, kind="fault")

    duration_ns = int(cfg.sim.duration_s * _S)

    def _end():
        # extend by accumulated freeze pauses so frozen spans do not eat
        # simulated time
        mw = world.middleware
        pause = sum(ev["duration_ns"] for ev in mw.freeze_events)
        if mw.frozen:
            loop.call_after(END_RECHECK_NS, _end, kind="end")
            return
        target = duration_ns + pause
        if loop.now_ns() < target:
            loop.call_at(target, _end, kind="end")
            return
        loop.stop()
    loop.call_at(duration_ns, _end, kind="end")

    def _finish() -> RunResult:
        if world.frame_sink is not None:
            world.frame_sink.finalize()
        streams = world.middleware.finalize()
        uavs = {}
        for uid, uav in sorted(world.fleet.uavs.items()):
            g = from_local(world.origin, uav.pos)
            task = world.uav_tasks[uid]
            uavs[str(uid)] = {
                "mode": uav.mode.value,
                "battery_pct": round(uav.battery_pct, 3),
                "flight_time_s": round(uav.flight_time_s, 3),
                "lat": g.lat, "lon": g.lon,
                "local_m": [round(uav.pos.x, 3), round(uav.pos.y, 3),
                            round(uav.pos.z, 3)],
                "ctrl_rx": task.ctrl_rx,
                "malformed_cmds": task.malformed,
            }
        frames = None
        if world.frame_sink is not None:
            frames = world.frame_sink.stats(world.frame_sources)
        report = build_report(
            scenario_name=cfg.name, seed=cfg.sim.seed,
            duration_s=cfg.sim.duration_s, sync_mode=cfg.sim.sync_mode,
            realtime=world.loop.realtime, streams=streams,
            freeze_events=world.middleware.freeze_events, uavs=uavs,
            frames=frames,
            extra={
                "missions": world.gcs.mission_summary(),
                "end_t_ns": loop.now_ns(),
                "wallclock_s": round(time.monotonic() - t_wall0, 3),
                "loop_errors": loop.n_errors,
            })
        recorder.close()
        if out_dir is not None:
            write_report(report, out_dir)
            from ..report.plots import render_figures
            render_figures(recorder, out_dir,
                           freeze_events=world.middleware.freeze_events)
        return RunResult(report=report, out_dir=out_dir, world=world)

    return world, _finish


def run_scenario(cfg: ScenarioCfg, out_dir: str = None, realtime: bool = True,
                 stall: StallFault = None) -> RunResult:
    world, finish = prepare(cfg, out_dir=out_dir, realtime=realtime,
                            stall=stall)
    world.loop.run()
    return finish()
