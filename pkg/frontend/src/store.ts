/** Client-side model of a live run, fed by parsed gateway messages. */

import type { Geo, LocalXY } from "./geo.js";
import { toLocal } from "./geo.js";
import { Ring } from "./ring.js";
import type {
  CmdOutcome,
  CmdStatusMsg,
  FreezeMsg,
  HelloMsg,
  MetricMsg,
  ServerMsg,
  TelemetryMsg,
} from "./protocol.js";

export type ConnState = "connecting" | "open" | "closed";

export interface UavView {
  id: number;
  lat: number;
  lon: number;
  altM: number;
  local: LocalXY;
  vx: number;
  vy: number;
  vz: number;
  headingDeg: number;
  batteryPct: number;
  mode: string;
  seq: number;
  tGenNs: number;
  trail: LocalXY[];
  stale: boolean;
}

export interface CommandEntry {
  cmdId: number;
  uavId: number;
  kind: string;
  status: CmdOutcome;
  reason: string;
  tNs: number;
}

export interface FreezeSpan {
  startNs: number;
  endNs: number | null;
}

export interface SeriesPoint {
  tNs: number;
  v: number;
}

export const TRAIL_CAP = 400;
const TRAIL_MIN_STEP_M = 0.2;
const SERIES_CAP = 1500;
const SERIES_KEY_CAP = 24;
const CMD_CAP = 200;
const FREEZE_CAP = 100;
const ERROR_CAP = 20;

export class FleetStore {
  conn: ConnState = "connecting";
  scenario = "";
  uavIds: number[] = [];
  origin: Geo | null = null;
  readonly uavs = new Map<number, UavView>();
  /** Newest first. */
  readonly commands: CommandEntry[] = [];
  readonly delaySeries = new Map<string, Ring<SeriesPoint>>();
  readonly rssSeries = new Map<string, Ring<SeriesPoint>>();
  readonly freezeSpans: FreezeSpan[] = [];
  frozen = false;
  /** Highest simulation timestamp seen on any message. */
  lastTNs = 0;
  telemetryCount = 0;
  readonly errors: string[] = [];

  apply(msg: ServerMsg): void {
    switch (msg.type) {
      case "hello":
        this.applyHello(msg);
        break;
      case "telemetry":
        this.applyTelemetry(msg);
        break;
      case "cmd_status":
        this.applyCmdStatus(msg);
        break;
      case "metric":
        this.applyMetric(msg);
        break;
      case "freeze":
        this.applyFreeze(msg);
        break;
      case "error":
        this.errors.unshift(msg.error);
        if (this.errors.length > ERROR_CAP) this.errors.pop();
        break;
    }
  }

  /** Connection transitions; anything but "open" marks vehicles stale. */
  setConn(c: ConnState): void {
    this.conn = c;
    if (c !== "open") {
      for (const u of this.uavs.values()) u.stale = true;
    }
  }

  private applyHello(msg: HelloMsg): void {
    if (this.scenario && msg.scenario !== this.scenario) {
      // a different run is behind this socket now: drop everything stale
      this.uavs.clear();
      this.commands.length = 0;
      this.delaySeries.clear();
      this.rssSeries.clear();
      this.freezeSpans.length = 0;
      this.frozen = false;
      this.origin = null;
      this.lastTNs = 0;
      this.telemetryCount = 0;
    }
    this.scenario = msg.scenario;
    this.uavIds = msg.uavs.slice().sort((a, b) => a - b);
    this.bumpT(msg.t_ns);
  }

  private applyTelemetry(msg: TelemetryMsg): void {
    if (this.origin === null) {
      this.origin = { lat: msg.lat, lon: msg.lon };
    }
    const local = toLocal(this.origin, { lat: msg.lat, lon: msg.lon });
    let u = this.uavs.get(msg.uav_id);
    if (u === undefined) {
      u = {
        id: msg.uav_id,
        lat: msg.lat, lon: msg.lon, altM: msg.alt_m, local,
        vx: msg.vx, vy: msg.vy, vz: msg.vz,
        headingDeg: msg.heading_deg, batteryPct: msg.battery_pct,
        mode: msg.mode, seq: msg.seq, tGenNs: msg.t_gen_ns,
        trail: [local], stale: false,
      };
      this.uavs.set(msg.uav_id, u);
      if (!this.uavIds.includes(msg.uav_id)) {
        this.uavIds.push(msg.uav_id);
        this.uavIds.sort((a, b) => a - b);
      }
    } else {
      u.lat = msg.lat;
      u.lon = msg.lon;
      u.altM = msg.alt_m;
      u.local = local;
      u.vx = msg.vx;
      u.vy = msg.vy;
      u.vz = msg.vz;
      u.headingDeg = msg.heading_deg;
      u.batteryPct = msg.battery_pct;
      u.mode = msg.mode;
      u.seq = msg.seq;
      u.tGenNs = msg.t_gen_ns;
      u.stale = false;
      const tail = u.trail[u.trail.length - 1];
      if (
        tail === undefined ||
        Math.hypot(local.x - tail.x, local.y - tail.y) >= TRAIL_MIN_STEP_M
      ) {
        u.trail.push(local);
        if (u.trail.length > TRAIL_CAP) u.trail.shift();
      }
    }
    this.telemetryCount += 1;
    this.bumpT(msg.t_gen_ns);
  }

  private applyCmdStatus(msg: CmdStatusMsg): void {
    const existing = this.commands.find((e) => e.cmdId === msg.cmd_id);
    if (existing !== undefined) {
      existing.status = msg.status;
      existing.reason = msg.reason;
      existing.tNs = msg.t_ns;
    } else {
      this.commands.unshift({
        cmdId: msg.cmd_id,
        uavId: msg.uav_id,
        kind: msg.kind,
        status: msg.status,
        reason: msg.reason,
        tNs: msg.t_ns,
      });
      if (this.commands.length > CMD_CAP) this.commands.pop();
    }
    this.bumpT(msg.t_ns);
  }

  private applyMetric(msg: MetricMsg): void {
    let series: Map<string, Ring<SeriesPoint>>;
    let key: string;
    if (msg.name === "delay_ms" && typeof msg.stream === "string") {
      series = this.delaySeries;
      key = msg.stream;
    } else if (msg.name === "rss_dbm" && typeof msg.node === "string") {
      series = this.rssSeries;
      key = msg.node;
    } else {
      return;
    }
    let ring = series.get(key);
    if (ring === undefined) {
      if (series.size >= SERIES_KEY_CAP) return;
      ring = new Ring<SeriesPoint>(SERIES_CAP);
      series.set(key, ring);
    }
    ring.push({ tNs: msg.t_ns, v: msg.value });
    this.bumpT(msg.t_ns);
  }

  private applyFreeze(msg: FreezeMsg): void {
    if (msg.state === "frozen") {
      this.frozen = true;
      this.freezeSpans.push({ startNs: msg.t_ns, endNs: null });
      if (this.freezeSpans.length > FREEZE_CAP) this.freezeSpans.shift();
    } else {
      this.frozen = false;
      const open = this.freezeSpans[this.freezeSpans.length - 1];
      if (open !== undefined && open.endNs === null) {
        open.endNs = msg.t_ns;
      }
    }
    this.bumpT(msg.t_ns);
  }

  /** Merge a REST fleet snapshot (used right after a reconnect). */
  applyRestSnapshot(snap: Record<string, { mode?: unknown; battery_pct?: unknown }>): void {
    for (const [idStr, v] of Object.entries(snap)) {
      const id = Number(idStr);
      if (!Number.isInteger(id)) continue;
      if (!this.uavIds.includes(id)) {
        this.uavIds.push(id);
        this.uavIds.sort((a, b) => a - b);
      }
      const u = this.uavs.get(id);
      if (u !== undefined) {
        if (typeof v.mode === "string") u.mode = v.mode;
        if (typeof v.battery_pct === "number") u.batteryPct = v.battery_pct;
      }
    }
  }

  private bumpT(tNs: number): void {
    if (tNs > this.lastTNs) this.lastTNs = tNs;
  }
}
