"""Ground control station.

Owns the operator-facing state: last-known telemetry per vehicle, the command
history with ACK tracking, and per-vehicle mission scripts. Commands can come
from a mission script or from an external caller (the web gateway); both go
through send_command, which is safe to call from other threads.

Mission progress is driven purely by received telemetry: a step is issued
when the vehicle reports the mode it needs, and considered complete when the
vehicle reports the step's final mode afterwards. There are no timers tied to
vehicle state, so missions survive freeze pauses unchanged.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..bus import Bus, Subscription
from ..flightsim import Command, Telemetry
from ..kernel import EventLoop

log = logging.getLogger(__name__)

MISSION_POLL_NS = 200_000_000
HISTORY_CAP = 1000

# command kind -> (modes it may be issued in, mode that marks completion)
_STEP_RULES = {
    "arm": (("disarmed",), "armed"),
    "takeoff": (("armed",), "hovering"),
    "goto": (("hovering",), "hovering"),
    "move": (("hovering",), "hovering"),
    "land": (("hovering", "moving"), "disarmed"),
    "set_speed": (("armed", "hovering", "moving", "taking_off"), None),
}


@dataclass
class CommandRecord:
    cmd_id: int
    uav_id: int
    kind: str
    t_issue_ns: int
    status: str = "pending"         # pending | ack | nack
    t_ack_ns: Optional[int] = None
    reason: str = ""


@dataclass
class MissionRunner:
    uav_id: int
    steps: list                      # list of command field dicts
    idx: int = 0
    pending_cmd: Optional[int] = None
    exec_final: Optional[str] = None
    ack_seq: int = -1
    failed: bool = False

    def done(self) -> bool:
        return self.failed or (self.idx >= len(self.steps)
                               and self.pending_cmd is None
                               and self.exec_final is None)


class GroundStation:
    def __init__(self, loop: EventLoop, bus: Bus):
        self.loop = loop
        self.bus = bus
        self.endpoint = bus.endpoint("gcs")
        self.telemetry: dict[int, Telemetry] = {}
        self.history: list[CommandRecord] = []
        self._by_cmd: dict[int, CommandRecord] = {}
        self.missions: dict[int, MissionRunner] = {}
        self.ctrl_rx = 0                      # uplink ping payloads consumed
        self._lock = threading.Lock()
        self._next_cmd_id = 1
        self._sub: Optional[Subscription] = None
        self.on_event: Optional[Callable[[dict], None]] = None  # gateway hook

    # -- wiring -----------------------------------------------------------

    def start(self):
        self._sub = self.bus.subscribe("net/gcs/telemetry")
        self._sub.set_waker(
            lambda: self.loop.call_soon(self._pump, kind="gcs-pump"))

    def add_mission(self, uav_id: int, steps: list):
        self.missions[uav_id] = MissionRunner(uav_id, steps)

    def start_missions(self):
        if any(m.steps for m in self.missions.values()):
            self.loop.call_soon(self._mission_poll, kind="mission-poll")

    # -- commands -----------------------------------------------------------

    def send_command(self, uav_id: int, kind: str, **fields) -> int:
        """Issue one command; returns its cmd_id. Thread-safe."""
        with self._lock:
            cmd_id = self._next_cmd_id
            self._next_cmd_id += 1
        t = self.loop.now_ns()
        cmd = Command.from_dict({"kind": kind, "cmd_id": cmd_id,
                                 "t_issue_ns": t, **fields})
        rec = CommandRecord(cmd_id, uav_id, kind, t)
        with self._lock:
            self.history.append(rec)
            if len(self.history) > HISTORY_CAP:
                old = self.history.pop(0)
                self._by_cmd.pop(old.cmd_id, None)
            self._by_cmd[cmd_id] = rec
        self.endpoint.publish(f"gcs/cmd/{uav_id}", cmd.to_payload())
        return cmd_id

    def command_status(self, cmd_id: int) -> Optional[CommandRecord]:
        with self._lock:
            return self._by_cmd.get(cmd_id)

    # -- telemetry intake ------------------------------------------------------

    def _pump(self):
        for env in self._sub.drain():
            try:
                tel = Telemetry.from_payload(env.payload)
            except (ValueError, KeyError) as e:
                log.warning("bad telemetry on %s: %s", env.topic, e)
                continue
            self.telemetry[tel.uav_id] = tel
            if tel.ack_cmd_id is not None:
                self._note_ack(tel)
            if self.on_event is not None:
                self.on_event({"type": "telemetry", "env_seq": env.seq,
                               "tel": tel})

    def _note_ack(self, tel: Telemetry):
        with self._lock:
            rec = self._by_cmd.get(tel.ack_cmd_id)
            if rec is not None and rec.status == "pending":
                rec.status = tel.ack_status
                rec.t_ack_ns = self.loop.now_ns()
                rec.reason = tel.ack_reason or ""
        if rec is not None and self.on_event is not None:
            self.on_event({"type": "cmd_status", "rec": rec})
        m = self.missions.get(tel.uav_id)
        if m is not None and m.pending_cmd == tel.ack_cmd_id:
            m.pending_cmd = None
            if tel.ack_status == "nack":
                log.warning("mission for uav %d halted: step %d (%s) rejected: %s",
                            tel.uav_id, m.idx - 1, tel.mode, tel.ack_reason)
                m.failed = True
                m.exec_final = None
            else:
                m.ack_seq = tel.seq
                if m.exec_final is None:
                    pass  # ack-only step (set_speed)

    # -- mission engine ----------------------------------------------------------

    def _mission_poll(self):
        for m in self.missions.values():
            if not m.done():
                self._advance_mission(m)
        if any(not m.done() for m in self.missions.values()):
            self.loop.call_after(MISSION_POLL_NS, self._mission_poll,
                                 kind="mission-poll")

    def _advance_mission(self, m: MissionRunner):
        tel = self.telemetry.get(m.uav_id)
        if m.pending_cmd is not None:
            return  # waiting for ACK
        if m.exec_final is not None:
            if tel is not None and tel.mode == m.exec_final and tel.seq >= m.ack_seq:
                m.exec_final = None
            else:
                return
        if m.idx >= len(m.steps):
            return
        step = dict(m.steps[m.idx])
        kind = step.pop("kind")
        issue_modes, final = _STEP_RULES[kind]
        mode = tel.mode if tel is not None else "disarmed"
        if kind == "arm" and tel is None:
            mode = "disarmed"  # nothing heard yet; arming is the first step
        if mode not in issue_modes:
            return  # telemetry not there yet; try next poll
        m.idx += 1
        m.exec_final = final
        m.pending_cmd = self.send_command(m.uav_id, kind, **step)
        log.debug("mission uav %d step %d: %s", m.uav_id, m.idx - 1, kind)

    def mission_summary(self) -> dict:
        # string keys so the report round-trips through JSON unchanged
        return {str(uid): {"steps": len(m.steps), "completed": m.idx,
                           "failed": m.failed, "done": m.done()}
                for uid, m in sorted(self.missions.items())}
