"""Geodetic helpers: great-circle distance and a flat local ENU frame.

The network side works in meters, the vehicles in latitude/longitude.
Conversion uses a spherical Earth (R = 6,371,000 m) and is only valid for
small areas (all shipped scenarios span well under a kilometer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0
MAX_LOCAL_SEPARATION_DEG = 1.0


class GeoRangeError(ValueError):
    """Separation too large for the flat local frame."""


@dataclass(frozen=True)
class GeoPos:
    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)
                and math.isfinite(self.alt)):
            raise ValueError("GeoPos fields must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of [-180, 180]")


@dataclass(frozen=True)
class LocalXY:
    x: float  # meters east of reference
    y: float  # meters north
    z: float  # meters up

    def dist(self, other: "LocalXY") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2
                         + (self.z - other.z) ** 2)


def haversine_m(a: GeoPos, b: GeoPos) -> float:
    """Great-circle surface distance in meters."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = (math.sin(dphi / 2.0) ** 2
         + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def to_local(ref: GeoPos, p: GeoPos) -> LocalXY:
    """Project p into the east/north/up frame centered at ref.

    East/north components are haversine distances taken along one axis at a
    time, signed by the direction of the offset.
    """
    dlat = p.lat - ref.lat
    dlon = p.lon - ref.lon
    if abs(dlat) >= MAX_LOCAL_SEPARATION_DEG or abs(dlon) >= MAX_LOCAL_SEPARATION_DEG:
        raise GeoRangeError(
            f"separation ({dlat:.3f} deg lat, {dlon:.3f} deg lon) exceeds "
            f"{MAX_LOCAL_SEPARATION_DEG} deg; scenario too large for the flat frame")
    x = math.copysign(haversine_m(ref, GeoPos(ref.lat, p.lon, ref.alt)), dlon)
    y = math.copysign(haversine_m(ref, GeoPos(p.lat, ref.lon, ref.alt)), dlat)
    return LocalXY(x, y, p.alt - ref.alt)


def from_local(ref: GeoPos, xy: LocalXY) -> GeoPos:
    """Exact inverse of to_local for in-range offsets."""
    dphi = xy.y / EARTH_RADIUS_M
    lat = ref.lat + math.degrees(dphi)
    cosphi = math.cos(math.radians(ref.lat))
    # invert the single-axis haversine at the reference latitude
    s = math.sin(abs(xy.x) / (2.0 * EARTH_RADIUS_M))
    if cosphi <= 0.0:
        dlam = 0.0
    else:
        dlam = 2.0 * math.asin(min(1.0, s / cosphi))
    lon = ref.lon + math.degrees(math.copysign(dlam, xy.x))
    return GeoPos(lat, lon, ref.alt + xy.z)
