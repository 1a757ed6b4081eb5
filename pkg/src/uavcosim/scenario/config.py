"""Scenario files: schema, defaults, and total validation.

A scenario is one JSON document. Unknown keys, malformed values, dangling
stream endpoints, and interface mismatches are all rejected up front with a
path-qualified message, so a run either starts clean or not at all.

Vehicles with a mission but no control/telemetry stream get one auto-added
over their first interface; scripts rely on both directions existing.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources as importlib_resources
from typing import Optional

from ..geo import GeoPos
from ..netsim.channel import ChannelParams
from ..netsim.lte import LteParams
from ..netsim.wifi import WifiParams

SYNC_MODES = ("besteffort", "hardlimit", "freezeassist")
STREAM_KINDS = ("control", "telemetry", "frames")
IFACES = ("wifi", "lte", "d2d")
MISSION_KINDS = ("arm", "takeoff", "goto", "move", "land", "set_speed")

_MS = 1_000_000


class ConfigError(ValueError):
    pass


def _ctx(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _take(d: dict, path: str, allowed: dict) -> dict:
    """Check keys against allowed{name: required}; returns d."""
    if not isinstance(d, dict):
        raise _ctx(path, f"expected an object, got {type(d).__name__}")
    for k in d:
        if k not in allowed:
            raise _ctx(path, f"unknown key {k!r} (allowed: {sorted(allowed)})")
    for k, required in allowed.items():
        if required and k not in d:
            raise _ctx(path, f"missing required key {k!r}")
    return d


def _num(v, path: str, lo=None, hi=None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _ctx(path, f"expected a number, got {v!r}")
    f = float(v)
    if not math.isfinite(f):
        raise _ctx(path, "must be finite")
    if lo is not None and f < lo:
        raise _ctx(path, f"{f} below minimum {lo}")
    if hi is not None and f > hi:
        raise _ctx(path, f"{f} above maximum {hi}")
    return f


def _int(v, path: str, lo=None, hi=None) -> int:
    f = _num(v, path, lo, hi)
    if f != int(f):
        raise _ctx(path, f"expected an integer, got {v!r}")
    return int(f)


def _str(v, path: str, choices=None) -> str:
    if not isinstance(v, str):
        raise _ctx(path, f"expected a string, got {v!r}")
    if choices is not None and v not in choices:
        raise _ctx(path, f"{v!r} not one of {list(choices)}")
    return v


def _xyz(v, path: str) -> tuple:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise _ctx(path, f"expected [x, y, z], got {v!r}")
    return tuple(_num(c, f"{path}[{i}]") for i, c in enumerate(v))


def _geo(d, path: str) -> GeoPos:
    _take(d, path, {"lat": True, "lon": True, "alt": False})
    try:
        return GeoPos(_num(d["lat"], f"{path}.lat"),
                      _num(d["lon"], f"{path}.lon"),
                      _num(d.get("alt", 0.0), f"{path}.alt"))
    except ValueError as e:
        raise _ctx(path, str(e)) from None


# -- sections ------------------------------------------------------------------


@dataclass
class SimCfg:
    duration_s: float = 30.0
    seed: int = 1
    sync_mode: str = "freezeassist"
    tick_ms: int = 10
    origin: Optional[GeoPos] = None
    hard_limit_ms: float = 50.0


@dataclass
class FramesCfg:
    fps: float = 30.0
    gop: int = 12
    i_bytes: int = 12000
    p_bytes: int = 3000
    frag_bytes: int = 1000


@dataclass
class StreamCfg:
    name: str
    src: str
    dst: str
    kind: str
    iface: str
    rate_hz: float = 10.0
    payload_bytes: int = 100
    frames: Optional[FramesCfg] = None


@dataclass
class MissionStep:
    kind: str
    fields: dict


@dataclass
class UavCfg:
    uav_id: int
    home: GeoPos
    ifaces: list
    mission: list = field(default_factory=list)


@dataclass
class WifiCfg:
    ap_pos: tuple = (0.0, 0.0, 5.0)
    tx_dbm: float = 16.0
    params: WifiParams = field(default_factory=WifiParams)
    channel: ChannelParams = field(default_factory=ChannelParams)


@dataclass
class D2dCfg:
    tx_dbm: float = 10.43
    channel: ChannelParams = field(default_factory=ChannelParams)


@dataclass
class LteCfg:
    enb_pos: tuple = (100.0, 0.0, 10.0)
    ue_tx_dbm: float = 23.0
    params: LteParams = field(default_factory=LteParams)
    channel: ChannelParams = field(default_factory=lambda: ChannelParams(nakagami_m=1.0))


@dataclass
class InterfererCfg:
    count: int
    rate_mbps: float = 10.0
    pkt_bytes: int = 1000
    pos: tuple = (5.0, 5.0, 0.0)
    start_s: float = 0.0
    stop_s: Optional[float] = None
    vel: Optional[tuple] = None


@dataclass
class ScenarioCfg:
    name: str
    sim: SimCfg
    uavs: list
    streams: list
    wifi: Optional[WifiCfg] = None
    d2d: Optional[D2dCfg] = None
    lte: Optional[LteCfg] = None
    interferers: list = field(default_factory=list)

    def uav(self, uav_id: int) -> UavCfg:
        for u in self.uavs:
            if u.uav_id == uav_id:
                return u
        raise KeyError(uav_id)


# -- parsing -----------------------------------------------------------------


def _parse_channel(d: dict, path: str, base: ChannelParams) -> ChannelParams:
    _take(d, path, {"pl0_db": False, "exponent": False, "nakagami_m": False,
                    "noise_floor_dbm": False})
    return ChannelParams(
        pl0_db=_num(d.get("pl0_db", base.pl0_db), f"{path}.pl0_db", 0.0),
        exponent=_num(d.get("exponent", base.exponent), f"{path}.exponent",
                      1.0, 6.0),
        nakagami_m=_num(d.get("nakagami_m", base.nakagami_m),
                        f"{path}.nakagami_m", 0.0, 50.0),
        noise_floor_dbm=_num(d.get("noise_floor_dbm", base.noise_floor_dbm),
                             f"{path}.noise_floor_dbm", -150.0, 0.0))


def _parse_wifi(d: dict, path: str) -> WifiCfg:
    _take(d, path, {"ap_pos": False, "tx_dbm": False, "channel": False,
                    "queue_max_delay_ms": False, "retry_limit": False})
    base = WifiCfg()
    params = WifiParams(
        queue_max_delay_ns=int(_num(d.get("queue_max_delay_ms", 500.0),
                                    f"{path}.queue_max_delay_ms", 1.0) * _MS),
        retry_limit=_int(d.get("retry_limit", 7), f"{path}.retry_limit", 1, 100))
    return WifiCfg(
        ap_pos=_xyz(d.get("ap_pos", list(base.ap_pos)), f"{path}.ap_pos"),
        tx_dbm=_num(d.get("tx_dbm", base.tx_dbm), f"{path}.tx_dbm", -30.0, 40.0),
        params=params,
        channel=_parse_channel(d.get("channel", {}), f"{path}.channel",
                               ChannelParams()))


def _parse_d2d(d: dict, path: str) -> D2dCfg:
    _take(d, path, {"tx_dbm": False, "channel": False})
    base = D2dCfg()
    return D2dCfg(
        tx_dbm=_num(d.get("tx_dbm", base.tx_dbm), f"{path}.tx_dbm", -30.0, 40.0),
        channel=_parse_channel(d.get("channel", {}), f"{path}.channel",
                               ChannelParams()))


def _parse_lte(d: dict, path: str) -> LteCfg:
    _take(d, path, {"enb_pos": False, "ue_tx_dbm": False, "channel": False,
                    "core_delay_ms": False, "bandwidth_mhz": False})
    base = LteCfg()
    params = LteParams(
        bandwidth_hz=_num(d.get("bandwidth_mhz", 20.0),
                          f"{path}.bandwidth_mhz", 1.4, 100.0) * 1e6,
        core_delay_ns=int(_num(d.get("core_delay_ms", 10.0),
                               f"{path}.core_delay_ms", 0.0) * _MS))
    return LteCfg(
        enb_pos=_xyz(d.get("enb_pos", list(base.enb_pos)), f"{path}.enb_pos"),
        ue_tx_dbm=_num(d.get("ue_tx_dbm", base.ue_tx_dbm), f"{path}.ue_tx_dbm",
                       -30.0, 40.0),
        params=params,
        channel=_parse_channel(d.get("channel", {}), f"{path}.channel",
                               LteCfg().channel))


def _parse_frames(d: dict, path: str) -> FramesCfg:
    _take(d, path, {"fps": False, "gop": False, "i_bytes": False,
                    "p_bytes": False, "frag_bytes": False})
    f = FramesCfg(
        fps=_num(d.get("fps", 30.0), f"{path}.fps", 1.0, 120.0),
        gop=_int(d.get("gop", 12), f"{path}.gop", 1, 300),
        i_bytes=_int(d.get("i_bytes", 12000), f"{path}.i_bytes", 100, 10_000_000),
        p_bytes=_int(d.get("p_bytes", 3000), f"{path}.p_bytes", 100, 10_000_000),
        frag_bytes=_int(d.get("frag_bytes", 1000), f"{path}.frag_bytes", 64, 65507))
    return f


def _parse_endpoint(v: str, path: str) -> str:
    s = _str(v, path)
    if s == "gcs":
        return s
    if s.startswith("uav:"):
        try:
            int(s[4:])
            return s
        except ValueError:
            pass
    raise _ctx(path, f"endpoint must be 'gcs' or 'uav:<id>', got {s!r}")


def endpoint_uav_id(endpoint: str) -> Optional[int]:
    return int(endpoint[4:]) if endpoint.startswith("uav:") else None


def _parse_stream(d: dict, path: str) -> StreamCfg:
    _take(d, path, {"name": True, "src": True, "dst": True, "kind": True,
                    "iface": True, "rate_hz": False, "payload_bytes": False,
                    "frames": False})
    kind = _str(d["kind"], f"{path}.kind", STREAM_KINDS)
    s = StreamCfg(
        name=_str(d["name"], f"{path}.name"),
        src=_parse_endpoint(d["src"], f"{path}.src"),
        dst=_parse_endpoint(d["dst"], f"{path}.dst"),
        kind=kind,
        iface=_str(d["iface"], f"{path}.iface", IFACES),
        rate_hz=_num(d.get("rate_hz", 10.0), f"{path}.rate_hz", 0.01, 1000.0),
        payload_bytes=_int(d.get("payload_bytes", 100), f"{path}.payload_bytes",
                           1, 65507),
        frames=_parse_frames(d.get("frames", {}), f"{path}.frames")
        if kind == "frames" else None)
    if not s.name or "/" in s.name or "," in s.name:
        raise _ctx(f"{path}.name", f"stream name {s.name!r} must be non-empty "
                   "without '/' or ','")
    return s


def _parse_mission_step(d: dict, path: str) -> MissionStep:
    if not isinstance(d, dict) or "kind" not in d:
        raise _ctx(path, f"expected an object with 'kind', got {d!r}")
    kind = _str(d["kind"], f"{path}.kind", MISSION_KINDS)
    fields = {k: v for k, v in d.items() if k != "kind"}
    allowed = {"arm": set(), "takeoff": {"alt_m"}, "land": set(),
               "goto": {"lat", "lon", "alt_m"}, "move": {"dx", "dy", "dz"},
               "set_speed": {"speed"}}[kind]
    for k in fields:
        if k not in allowed:
            raise _ctx(path, f"unknown field {k!r} for {kind}")
    if kind == "takeoff":
        _num(d.get("alt_m"), f"{path}.alt_m", 0.1, 500.0)
    if kind == "goto":
        _num(d.get("lat"), f"{path}.lat", -90.0, 90.0)
        _num(d.get("lon"), f"{path}.lon", -180.0, 180.0)
    if kind == "move":
        for k in ("dx", "dy", "dz"):
            if k in fields:
                _num(fields[k], f"{path}.{k}", -10_000.0, 10_000.0)
    if kind == "set_speed":
        _num(d.get("speed"), f"{path}.speed", 0.01, 30.0)
    return MissionStep(kind, fields)


def _parse_uav(d: dict, path: str) -> UavCfg:
    _take(d, path, {"id": True, "home": True, "ifaces": True, "mission": False})
    ifaces = d["ifaces"]
    if not isinstance(ifaces, list) or not ifaces:
        raise _ctx(f"{path}.ifaces", "expected a non-empty list")
    for i, f in enumerate(ifaces):
        _str(f, f"{path}.ifaces[{i}]", IFACES)
    mission = d.get("mission", [])
    if not isinstance(mission, list):
        raise _ctx(f"{path}.mission", "expected a list")
    return UavCfg(
        uav_id=_int(d["id"], f"{path}.id", 0, 9999),
        home=_geo(d["home"], f"{path}.home"),
        ifaces=list(dict.fromkeys(ifaces)),
        mission=[_parse_mission_step(s, f"{path}.mission[{i}]")
                 for i, s in enumerate(mission)])


def _parse_interferer(d: dict, path: str) -> InterfererCfg:
    _take(d, path, {"count": True, "rate_mbps": False, "pkt_bytes": False,
                    "pos": False, "start_s": False, "stop_s": False,
                    "vel": False})
    stop = d.get("stop_s")
    vel = d.get("vel")
    if vel is not None:
        if not isinstance(vel, (list, tuple)) or len(vel) != 2:
            raise _ctx(f"{path}.vel", f"expected [vx, vy], got {vel!r}")
        vel = (_num(vel[0], f"{path}.vel[0]", -50, 50),
               _num(vel[1], f"{path}.vel[1]", -50, 50))
    return InterfererCfg(
        count=_int(d["count"], f"{path}.count", 0, 200),
        rate_mbps=_num(d.get("rate_mbps", 10.0), f"{path}.rate_mbps", 0.01, 600.0),
        pkt_bytes=_int(d.get("pkt_bytes", 1000), f"{path}.pkt_bytes", 64, 65507),
        pos=_xyz(d.get("pos", [5.0, 5.0, 0.0]), f"{path}.pos"),
        start_s=_num(d.get("start_s", 0.0), f"{path}.start_s", 0.0),
        stop_s=None if stop is None else _num(stop, f"{path}.stop_s", 0.0),
        vel=vel)


def parse_config(doc: dict, name: str = "scenario") -> ScenarioCfg:
    _take(doc, name, {"name": False, "sim": False, "uavs": True,
                      "streams": False, "wifi": False, "d2d": False,
                      "lte": False, "interferers": False})
    simd = _take(doc.get("sim", {}), f"{name}.sim",
                 {"duration_s": False, "seed": False, "sync_mode": False,
                  "tick_ms": False, "origin": False, "hard_limit_ms": False})
    origin = _geo(simd["origin"], f"{name}.sim.origin") if "origin" in simd else None
    sim = SimCfg(
        duration_s=_num(simd.get("duration_s", 30.0), f"{name}.sim.duration_s",
                        0.1, 3600.0),
        seed=_int(simd.get("seed", 1), f"{name}.sim.seed", 0),
        sync_mode=_str(simd.get("sync_mode", "freezeassist"),
                       f"{name}.sim.sync_mode", SYNC_MODES),
        tick_ms=_int(simd.get("tick_ms", 10), f"{name}.sim.tick_ms", 1, 100),
        origin=origin,
        hard_limit_ms=_num(simd.get("hard_limit_ms", 50.0),
                           f"{name}.sim.hard_limit_ms", 1.0))

    uavs_d = doc["uavs"]
    if not isinstance(uavs_d, list) or not uavs_d:
        raise _ctx(f"{name}.uavs", "expected a non-empty list")
    uavs = [_parse_uav(u, f"{name}.uavs[{i}]") for i, u in enumerate(uavs_d)]
    seen = set()
    for i, u in enumerate(uavs):
        if u.uav_id in seen:
            raise _ctx(f"{name}.uavs[{i}].id", f"duplicate uav id {u.uav_id}")
        seen.add(u.uav_id)

    streams_d = doc.get("streams", [])
    if not isinstance(streams_d, list):
        raise _ctx(f"{name}.streams", "expected a list")
    streams = [_parse_stream(s, f"{name}.streams[{i}]")
               for i, s in enumerate(streams_d)]

    cfg = ScenarioCfg(
        name=_str(doc.get("name", name), f"{name}.name"),
        sim=sim, uavs=uavs, streams=streams,
        wifi=_parse_wifi(doc["wifi"], f"{name}.wifi") if "wifi" in doc else None,
        d2d=_parse_d2d(doc["d2d"], f"{name}.d2d") if "d2d" in doc else None,
        lte=_parse_lte(doc["lte"], f"{name}.lte") if "lte" in doc else None,
        interferers=[_parse_interferer(x, f"{name}.interferers[{i}]")
                     for i, x in enumerate(doc.get("interferers", []))])
    _autofill_streams(cfg)
    _cross_validate(cfg, name)
    return cfg


def _autofill_streams(cfg: ScenarioCfg):
    """Vehicles flying a mission need both command and telemetry paths."""
    for u in cfg.uavs:
        if not u.mission:
            continue
        ep = f"uav:{u.uav_id}"
        iface = u.ifaces[0]
        if not any(s.kind == "control" and s.dst == ep for s in cfg.streams):
            cfg.streams.append(StreamCfg(name=f"cmd-{u.uav_id}", src="gcs",
                                         dst=ep, kind="control", iface=iface,
                                         rate_hz=10.0, payload_bytes=100))
        if not any(s.kind == "telemetry" and s.src == ep for s in cfg.streams):
            cfg.streams.append(StreamCfg(name=f"tel-{u.uav_id}", src=ep,
                                         dst="gcs", kind="telemetry",
                                         iface=iface, rate_hz=10.0,
                                         payload_bytes=200))


def _cross_validate(cfg: ScenarioCfg, name: str):
    ids = {u.uav_id for u in cfg.uavs}
    names = set()
    for i, s in enumerate(cfg.streams):
        path = f"{name}.streams[{i}]({s.name})"
        if s.name in names:
            raise _ctx(path, f"duplicate stream name {s.name!r}")
        names.add(s.name)
        sides = (s.src, s.dst)
        if sum(1 for e in sides if e == "gcs") != 1:
            raise _ctx(path, "exactly one endpoint must be 'gcs'")
        uid = endpoint_uav_id(s.src if s.src != "gcs" else s.dst)
        if uid not in ids:
            raise _ctx(path, f"references unknown uav:{uid}")
        u = cfg.uav(uid)
        if s.iface not in u.ifaces:
            raise _ctx(path, f"uav:{uid} has no {s.iface!r} interface "
                       f"(has {u.ifaces})")
        if s.kind == "control" and s.src != "gcs":
            raise _ctx(path, "control streams originate at the gcs")
        if s.kind in ("telemetry", "frames") and s.src == "gcs":
            raise _ctx(path, f"{s.kind} streams originate at a vehicle")
    for i, u in enumerate(cfg.uavs):
        for f in u.ifaces:
            section = getattr(cfg, "wifi" if f == "wifi" else f)
            if section is None:
                raise _ctx(f"{name}.uavs[{i}]",
                           f"interface {f!r} used but section {f!r} missing")
        if "d2d" in u.ifaces and "wifi" not in u.ifaces:
            raise _ctx(f"{name}.uavs[{i}]",
                       "d2d relays also need the 'wifi' interface for the "
                       "access-point leg")
    if cfg.lte is not None:
        n_lte = sum(1 for u in cfg.uavs if "lte" in u.ifaces)
        if n_lte > cfg.lte.params.max_ue:
            raise _ctx(f"{name}.uavs", f"{n_lte} cellular vehicles exceed the "
                       f"cell cap of {cfg.lte.params.max_ue}")
    if cfg.interferers and cfg.wifi is None:
        raise _ctx(f"{name}.interferers", "interferers need the wifi section")
    for i, itf in enumerate(cfg.interferers):
        if itf.stop_s is not None and itf.stop_s <= itf.start_s:
            raise _ctx(f"{name}.interferers[{i}]",
                       f"stop_s {itf.stop_s} must be after start_s {itf.start_s}")


def load_config(source: str) -> ScenarioCfg:
    """Load a scenario from a preset name or a JSON file path."""
    if os.path.exists(source):
        with open(source) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{source}: invalid JSON: {e}") from e
        return parse_config(doc, os.path.basename(source))
    try:
        ref = importlib_resources.files("uavcosim.scenario") / "presets" / f"{source}.json"
        doc = json.loads(ref.read_text())
    except (FileNotFoundError, ModuleNotFoundError):
        raise ConfigError(f"no such scenario file or preset: {source!r}") from None
    return parse_config(doc, source)


def preset_names() -> list:
    base = importlib_resources.files("uavcosim.scenario") / "presets"
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))
