"""Point-mass multicopter simulator.

Each vehicle integrates a simple kinematic model on a fixed tick: ramp-limited
speed along the straight line to the target, separate vertical speed cap, and
a linear battery drain. The model is deliberately coarse; what matters for the
rest of the stack is that state changes are deterministic for a given command
sequence and that telemetry is emitted on movement, on discrete changes, and
on a heartbeat.

All positions are in the local east/north/up frame (see geo.py); the scenario
layer converts to latitude/longitude at the edges.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .geo import GeoPos, LocalXY, from_local, to_local

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    DISARMED = "disarmed"
    ARMED = "armed"
    TAKING_OFF = "taking_off"
    HOVERING = "hovering"
    MOVING = "moving"
    LANDING = "landing"


AIRBORNE = frozenset({Mode.TAKING_OFF, Mode.HOVERING, Mode.MOVING, Mode.LANDING})


@dataclass(frozen=True)
class UavParams:
    v_h_max: float = 5.0        # m/s horizontal
    v_z_max: float = 2.5        # m/s vertical
    a_max: float = 2.0          # m/s^2 speed ramp
    tick_ms: int = 10
    heartbeat_s: float = 1.0
    arrival_radius_m: float = 0.5
    emit_move_m: float = 0.1
    drain_fly_pct_s: float = 100.0 / 900.0    # empty in 15 min of flight
    drain_idle_pct_s: float = 100.0 / 7200.0  # empty in 2 h armed on the pad
    battery_pct: float = 100.0


class CommandError(ValueError):
    """Malformed or out-of-range command payload."""


@dataclass(frozen=True)
class Command:
    kind: str
    cmd_id: int
    t_issue_ns: int = 0
    alt_m: float = 0.0
    target: Optional[GeoPos] = None
    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    speed: float = 0.0

    KINDS = ("arm", "takeoff", "goto", "move", "land", "set_speed")

    def to_payload(self) -> bytes:
        d = {"kind": self.kind, "cmd_id": self.cmd_id, "t_issue_ns": self.t_issue_ns}
        if self.kind == "takeoff":
            d["alt_m"] = self.alt_m
        elif self.kind == "goto":
            d["lat"] = self.target.lat
            d["lon"] = self.target.lon
            d["alt_m"] = self.target.alt
        elif self.kind == "move":
            d.update(dx=self.dx, dy=self.dy, dz=self.dz)
        elif self.kind == "set_speed":
            d["speed"] = self.speed
        return json.dumps(d, separators=(",", ":")).encode()

    @classmethod
    def from_payload(cls, raw: bytes) -> "Command":
        try:
            d = json.loads(raw.decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CommandError(f"undecodable command: {e}") from e
        return cls.from_dict(d)

    @classmethod
    def from_dict(cls, d: dict) -> "Command":
        kind = d.get("kind")
        if kind not in cls.KINDS:
            raise CommandError(f"unknown command kind {kind!r}")
        try:
            cmd_id = int(d["cmd_id"])
        except (KeyError, TypeError, ValueError) as e:
            raise CommandError("missing or non-integer cmd_id") from e
        t_issue = int(d.get("t_issue_ns", 0))
        if kind == "takeoff":
            alt = _finite(d.get("alt_m"), "alt_m")
            if alt <= 0.0:
                raise CommandError(f"takeoff alt_m must be > 0, got {alt}")
            return cls(kind, cmd_id, t_issue, alt_m=alt)
        if kind == "goto":
            target = GeoPos(_finite(d.get("lat"), "lat"),
                            _finite(d.get("lon"), "lon"),
                            _finite(d.get("alt_m", 0.0), "alt_m"))
            return cls(kind, cmd_id, t_issue, target=target)
        if kind == "move":
            return cls(kind, cmd_id, t_issue,
                       dx=_finite(d.get("dx", 0.0), "dx"),
                       dy=_finite(d.get("dy", 0.0), "dy"),
                       dz=_finite(d.get("dz", 0.0), "dz"))
        if kind == "set_speed":
            return cls(kind, cmd_id, t_issue, speed=_finite(d.get("speed"), "speed"))
        return cls(kind, cmd_id, t_issue)


def _finite(v, name: str) -> float:
    try:
        f = float(v)
    except (TypeError, ValueError) as e:
        raise CommandError(f"{name} must be a number, got {v!r}") from e
    if not math.isfinite(f):
        raise CommandError(f"{name} must be finite")
    return f


@dataclass
class Telemetry:
    uav_id: int
    seq: int
    lat: float
    lon: float
    alt_m: float
    vx: float
    vy: float
    vz: float
    heading_deg: float
    battery_pct: float
    mode: str
    t_gen_ns: int
    ack_cmd_id: Optional[int] = None
    ack_status: Optional[str] = None  # "ack" | "nack"
    ack_reason: Optional[str] = None

    def to_payload(self) -> bytes:
        d = {"uav_id": self.uav_id, "seq": self.seq,
             "lat": self.lat, "lon": self.lon, "alt_m": self.alt_m,
             "vx": self.vx, "vy": self.vy, "vz": self.vz,
             "heading_deg": self.heading_deg,
             "battery_pct": self.battery_pct,
             "mode": self.mode, "t_gen_ns": self.t_gen_ns}
        if self.ack_cmd_id is not None:
            d["ack_cmd_id"] = self.ack_cmd_id
            d["ack_status"] = self.ack_status
            if self.ack_reason:
                d["ack_reason"] = self.ack_reason
        return json.dumps(d, separators=(",", ":")).encode()

    @classmethod
    def from_payload(cls, raw: bytes) -> "Telemetry":
        d = json.loads(raw.decode())
        return cls(uav_id=d["uav_id"], seq=d["seq"], lat=d["lat"], lon=d["lon"],
                   alt_m=d["alt_m"], vx=d["vx"], vy=d["vy"], vz=d["vz"],
                   heading_deg=d["heading_deg"], battery_pct=d["battery_pct"],
                   mode=d["mode"], t_gen_ns=d["t_gen_ns"],
                   ack_cmd_id=d.get("ack_cmd_id"), ack_status=d.get("ack_status"),
                   ack_reason=d.get("ack_reason"))


@dataclass(frozen=True)
class FlightSnapshot:
    """State captured by freeze(); opaque to callers."""
    t_frozen_ns: int
    fields: dict


class FreezeStateError(RuntimeError):
    pass


class Uav:
    """One vehicle. Pure logic: the caller drives step() on its tick."""

    def __init__(self, uav_id: int, home: GeoPos, origin: GeoPos,
                 params: UavParams = UavParams(),
                 clock: Callable[[], int] = None):
        self.uav_id = uav_id
        self.params = params
        self.origin = origin
        self.home = to_local(origin, home)
        self.pos = self.home
        self.vel = (0.0, 0.0, 0.0)
        self.mode = Mode.DISARMED
        self.heading_deg = 0.0
        self.battery_pct = params.battery_pct
        self.flight_time_s = 0.0
        self.speed_limit = params.v_h_max
        self.target: Optional[LocalXY] = None
        self.clock = clock if clock is not None else (lambda: 0)
        self.frozen = False
        self.seq = 0
        self._last_emit_pos = self.pos
        self._last_emit_ns: Optional[int] = None
        self._force_emit = True  # first step always reports
        self._pending_acks: list[tuple[int, str, str]] = []
        self._ramp_speed = 0.0

    # -- commands ---------------------------------------------------------

    def handle_command(self, cmd: Command) -> bool:
        """Apply a command; queues an ACK or NACK for the next telemetry."""
        ok, reason = self._apply(cmd)
        status = "ack" if ok else "nack"
        self._pending_acks.append((cmd.cmd_id, status, reason))
        self._force_emit = True
        if not ok:
            log.info("uav %d rejected %s (cmd %d): %s",
                     self.uav_id, cmd.kind, cmd.cmd_id, reason)
        return ok

    def _apply(self, cmd: Command) -> tuple[bool, str]:
        m = self.mode
        if cmd.kind == "arm":
            if m is not Mode.DISARMED:
                return False, f"arm only valid when disarmed (mode={m.value})"
            if self.battery_pct <= 0.0:
                return False, "battery empty"
            self.mode = Mode.ARMED
            return True, ""
        if cmd.kind == "takeoff":
            if m is not Mode.ARMED:
                return False, f"takeoff requires armed (mode={m.value})"
            self.target = replace(self.pos, z=self.pos.z + cmd.alt_m)
            self.mode = Mode.TAKING_OFF
            return True, ""
        if cmd.kind == "goto":
            if m not in (Mode.HOVERING, Mode.MOVING):
                return False, f"goto requires hovering or moving (mode={m.value})"
            try:
                self.target = to_local(self.origin, cmd.target)
            except ValueError as e:
                return False, f"bad goto target: {e}"
            self._start_move()
            return True, ""
        if cmd.kind == "move":
            if m not in (Mode.HOVERING, Mode.MOVING):
                return False, f"move requires hovering or moving (mode={m.value})"
            self.target = LocalXY(self.pos.x + cmd.dx, self.pos.y + cmd.dy,
                                  self.pos.z + cmd.dz)
            self._start_move()
            return True, ""
        if cmd.kind == "land":
            if m not in (Mode.TAKING_OFF, Mode.HOVERING, Mode.MOVING):
                return False, f"land requires an airborne mode (mode={m.value})"
            self.target = replace(self.pos, z=self.home.z)
            self.mode = Mode.LANDING
            return True, ""
        if cmd.kind == "set_speed":
            if m is Mode.DISARMED:
                return False, "set_speed requires an armed vehicle"
            if not 0.0 < cmd.speed <= self.params.v_h_max:
                return False, (f"speed {cmd.speed} outside "
                               f"(0, {self.params.v_h_max}]")
            self.speed_limit = cmd.speed
            return True, ""
        return False, f"unknown kind {cmd.kind}"

    def _start_move(self):
        if self.mode is not Mode.MOVING:
            self.mode = Mode.MOVING
            self._ramp_speed = 0.0

    # -- integration ------------------------------------------------------

    def step(self, dt_s: float) -> Optional[Telemetry]:
        """Advance one tick; returns telemetry if emission policy fires."""
        if self.frozen:
            raise FreezeStateError(f"uav {self.uav_id} stepped while frozen")
        if not 0.0 < dt_s <= 0.1:
            raise ValueError(f"dt {dt_s} outside (0, 0.1] s")
        p = self.params
        mode_before = self.mode

        if self.mode is Mode.TAKING_OFF:
            dz = self.target.z - self.pos.z
            vz = math.copysign(min(p.v_z_max, abs(dz) / dt_s), dz)
            self.pos = replace(self.pos, z=self.pos.z + vz * dt_s)
            self.vel = (0.0, 0.0, vz)
            if abs(self.target.z - self.pos.z) < 1e-9:
                self.pos = replace(self.pos, z=self.target.z)
                self._hover()
        elif self.mode is Mode.LANDING:
            dz = self.target.z - self.pos.z
            vz = math.copysign(min(p.v_z_max, abs(dz) / dt_s), dz) if dz else 0.0
            self.pos = replace(self.pos, z=self.pos.z + vz * dt_s)
            self.vel = (0.0, 0.0, vz)
            if abs(self.target.z - self.pos.z) < 1e-9:
                self.pos = replace(self.pos, z=self.target.z)
                self.mode = Mode.DISARMED
                self.vel = (0.0, 0.0, 0.0)
                self.target = None
        elif self.mode is Mode.MOVING:
            self._step_moving(dt_s)
        else:
            self.vel = (0.0, 0.0, 0.0)

        self.battery_step(dt_s)
        if self.mode in AIRBORNE:
            self.flight_time_s += dt_s
        vx, vy, _ = self.vel
        if math.hypot(vx, vy) > 1e-6:
            self.heading_deg = math.degrees(math.atan2(vx, vy)) % 360.0

        if self.mode is not mode_before:
            self._force_emit = True
        return self._maybe_emit()

    def _step_moving(self, dt_s: float):
        p = self.params
        dx = self.target.x - self.pos.x
        dy = self.target.y - self.pos.y
        dz = self.target.z - self.pos.z
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist <= p.arrival_radius_m:
            self._hover()
            return
        self._ramp_speed = min(self._ramp_speed + p.a_max * dt_s,
                               self.speed_limit, dist / dt_s)
        ux, uy, uz = dx / dist, dy / dist, dz / dist
        vx = self._ramp_speed * ux
        vy = self._ramp_speed * uy
        vz = self._ramp_speed * uz
        if abs(vz) > p.v_z_max:
            vz = math.copysign(p.v_z_max, vz)
        self.pos = LocalXY(self.pos.x + vx * dt_s, self.pos.y + vy * dt_s,
                           self.pos.z + vz * dt_s)
        self.vel = (vx, vy, vz)
        dx = self.target.x - self.pos.x
        dy = self.target.y - self.pos.y
        dz = self.target.z - self.pos.z
        if math.sqrt(dx * dx + dy * dy + dz * dz) <= p.arrival_radius_m:
            self._hover()

    def _hover(self):
        self.mode = Mode.HOVERING
        self.vel = (0.0, 0.0, 0.0)
        self.target = None
        self._ramp_speed = 0.0

    def battery_step(self, dt_s: float):
        p = self.params
        if self.mode in AIRBORNE:
            self.battery_pct -= p.drain_fly_pct_s * dt_s
        elif self.mode is Mode.ARMED:
            self.battery_pct -= p.drain_idle_pct_s * dt_s
        if self.battery_pct <= 0.0:
            self.battery_pct = 0.0
            if self.mode in (Mode.TAKING_OFF, Mode.HOVERING, Mode.MOVING):
                # forced landing; overrides any active target
                log.warning("uav %d battery empty, forcing landing", self.uav_id)
                self.target = replace(self.pos, z=self.home.z)
                self.mode = Mode.LANDING

    # -- telemetry --------------------------------------------------------

    def _maybe_emit(self) -> Optional[Telemetry]:
        now = self.clock()
        p = self.params
        due = (self._force_emit
               or self.pos.dist(self._last_emit_pos) >= p.emit_move_m
               or self._last_emit_ns is None
               or now - self._last_emit_ns >= int(p.heartbeat_s * 1e9))
        if not due:
            return None
        return self.make_telemetry(now)

    def make_telemetry(self, now_ns: Optional[int] = None) -> Telemetry:
        if now_ns is None:
            now_ns = self.clock()
        ack = self._pending_acks.pop(0) if self._pending_acks else None
        self._force_emit = bool(self._pending_acks)  # one ack per message
        self._last_emit_pos = self.pos
        self._last_emit_ns = now_ns
        g = from_local(self.origin, self.pos)
        self.seq += 1
        return Telemetry(
            uav_id=self.uav_id, seq=self.seq,
            lat=g.lat, lon=g.lon, alt_m=self.pos.z - self.home.z,
            vx=self.vel[0], vy=self.vel[1], vz=self.vel[2],
            heading_deg=self.heading_deg, battery_pct=self.battery_pct,
            mode=self.mode.value, t_gen_ns=now_ns,
            ack_cmd_id=ack[0] if ack else None,
            ack_status=ack[1] if ack else None,
            ack_reason=(ack[2] or None) if ack else None)

    # -- freeze / resume --------------------------------------------------

    _SNAP_FIELDS = ("pos", "vel", "mode", "heading_deg", "battery_pct",
                    "flight_time_s", "speed_limit", "target", "seq",
                    "_ramp_speed", "_last_emit_pos", "_force_emit")

    def freeze(self) -> FlightSnapshot:
        if self.frozen:
            raise FreezeStateError(f"uav {self.uav_id} already frozen")
        self.frozen = True
        snap = FlightSnapshot(self.clock(),
                              {f: getattr(self, f) for f in self._SNAP_FIELDS})
        return snap

    def resume(self, snapshot: FlightSnapshot, pause_ns: int):
        if not self.frozen:
            raise FreezeStateError(f"uav {self.uav_id} resumed while not frozen")
        for f, v in snapshot.fields.items():
            setattr(self, f, v)
        # shift the heartbeat base so the pause does not trigger a burst
        if self._last_emit_ns is not None:
            self._last_emit_ns += pause_ns
        self.frozen = False


class FleetError(ValueError):
    pass


class Fleet:
    """Registry of vehicles sharing one local frame."""

    def __init__(self, origin: GeoPos):
        self.origin = origin
        self.uavs: dict[int, Uav] = {}

    def spawn(self, uav_id: int, home: GeoPos,
              params: UavParams = UavParams(),
              clock: Callable[[], int] = None) -> Uav:
        if uav_id in self.uavs:
            raise FleetError(f"duplicate uav_id {uav_id}")
        uav = Uav(uav_id, home, self.origin, params, clock)
        self.uavs[uav_id] = uav
        return uav

    def get(self, uav_id: int) -> Uav:
        try:
            return self.uavs[uav_id]
        except KeyError:
            raise FleetError(f"unknown uav_id {uav_id}") from None
