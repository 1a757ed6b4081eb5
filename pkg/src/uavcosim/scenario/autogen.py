"""Programmatic scenario generation for scale studies.

Lays vehicles on a grid around the access point, each with a short
arm/takeoff mission, a command stream, and a telemetry stream. Used by the
scale benchmarks where writing a JSON file per size would be noise.
"""

from __future__ import annotations

from ..geo import GeoPos, from_local, LocalXY
from .config import ScenarioCfg, parse_config

DEFAULT_ORIGIN = GeoPos(33.6405, -117.8443, 0.0)
GRID_SPACING_M = 15.0


def scale_scenario(n_uavs: int, duration_s: float = 60.0, seed: int = 1,
                   iface: str = "wifi", sync_mode: str = "freezeassist",
                   origin: GeoPos = DEFAULT_ORIGIN) -> ScenarioCfg:
    if n_uavs < 1:
        raise ValueError("n_uavs must be >= 1")
    cols = max(1, round(n_uavs ** 0.5))
    uavs = []
    for k in range(n_uavs):
        x = GRID_SPACING_M * (1 + k % cols)
        y = GRID_SPACING_M * (1 + k // cols)
        home = from_local(origin, LocalXY(x, y, 0.0))
        uavs.append({
            "id": k + 1,
            "home": {"lat": home.lat, "lon": home.lon},
            "ifaces": [iface],
            "mission": [{"kind": "arm"}, {"kind": "takeoff", "alt_m": 10.0}],
        })
    doc = {
        "name": f"scale-{n_uavs}",
        "sim": {"duration_s": duration_s, "seed": seed,
                "sync_mode": sync_mode,
                "origin": {"lat": origin.lat, "lon": origin.lon}},
        "uavs": uavs,
        "streams": [],
    }
    if iface == "wifi":
        doc["wifi"] = {"ap_pos": [0.0, 0.0, 5.0]}
    elif iface == "lte":
        doc["lte"] = {"enb_pos": [0.0, 50.0, 10.0]}
    else:
        raise ValueError(f"scale scenarios support wifi or lte, not {iface!r}")
    return parse_config(doc, doc["name"])
