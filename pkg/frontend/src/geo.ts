/** Flat east/north frame around a reference point, spherical Earth.
 *
 * Matches the simulator's own projection so map clicks land where the
 * vehicle model expects them. Only valid for sub-kilometer scenes.
 */

export const EARTH_RADIUS_M = 6_371_000.0;

export interface Geo {
  lat: number;
  lon: number;
}

export interface LocalXY {
  x: number; // meters east
  y: number; // meters north
}

function haversineM(a: Geo, b: Geo): number {
  const rad = Math.PI / 180;
  const phi1 = a.lat * rad;
  const phi2 = b.lat * rad;
  const dphi = (b.lat - a.lat) * rad;
  const dlam = (b.lon - a.lon) * rad;
  const h =
    Math.sin(dphi / 2) ** 2 +
    Math.cos(phi1) * Math.cos(phi2) * Math.sin(dlam / 2) ** 2;
  return 2 * EARTH_RADIUS_M * Math.asin(Math.min(1, Math.sqrt(h)));
}

export function toLocal(ref: Geo, p: Geo): LocalXY {
  const x = Math.sign(p.lon - ref.lon || 0) *
    haversineM(ref, { lat: ref.lat, lon: p.lon });
  const y = Math.sign(p.lat - ref.lat || 0) *
    haversineM(ref, { lat: p.lat, lon: ref.lon });
  return { x, y };
}

export function fromLocal(ref: Geo, xy: LocalXY): Geo {
  const deg = 180 / Math.PI;
  const lat = ref.lat + (xy.y / EARTH_RADIUS_M) * deg;
  const cosphi = Math.cos((ref.lat * Math.PI) / 180);
  const s = Math.sin(Math.abs(xy.x) / (2 * EARTH_RADIUS_M));
  const dlam = cosphi <= 0 ? 0 : 2 * Math.asin(Math.min(1, s / cosphi));
  const lon = ref.lon + Math.sign(xy.x || 0) * dlam * deg;
  return { lat, lon };
}
