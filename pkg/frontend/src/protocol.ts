/** Gateway wire protocol: one JSON object per WebSocket text frame. */

export interface HelloMsg {
  type: "hello";
  scenario: string;
  uavs: number[];
  t_ns: number;
}

export interface TelemetryMsg {
  type: "telemetry";
  uav_id: number;
  seq: number;
  lat: number;
  lon: number;
  alt_m: number;
  vx: number;
  vy: number;
  vz: number;
  heading_deg: number;
  battery_pct: number;
  mode: string;
  t_gen_ns: number;
}

export type CmdOutcome = "pending" | "ack" | "nack";

export interface CmdStatusMsg {
  type: "cmd_status";
  cmd_id: number;
  uav_id: number;
  kind: string;
  status: CmdOutcome;
  reason: string;
  t_ns: number;
}

export interface MetricMsg {
  type: "metric";
  name: string;
  value: number;
  t_ns: number;
  stream?: string;
  node?: string;
}

export interface FreezeMsg {
  type: "freeze";
  state: "frozen" | "active";
  t_ns: number;
  pause_ns?: number;
}

export interface ErrorMsg {
  type: "error";
  error: string;
}

export type ServerMsg =
  | HelloMsg
  | TelemetryMsg
  | CmdStatusMsg
  | MetricMsg
  | FreezeMsg
  | ErrorMsg;

export interface CommandMsg {
  type: "command";
  uav_id: number;
  kind: string;
  [field: string]: unknown;
}

export interface SubscribeMsg {
  type: "subscribe";
  kinds: string[];
}

const num = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);
const str = (v: unknown): v is string => typeof v === "string";

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

/** Parse one frame; returns null for anything malformed or unknown. */
export function parseServerMsg(raw: unknown): ServerMsg | null {
  if (typeof raw !== "string") return null;
  let d: unknown;
  try {
    d = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isRecord(d)) return null;
  switch (d.type) {
    case "hello":
      if (
        str(d.scenario) &&
        Array.isArray(d.uavs) &&
        d.uavs.every(num) &&
        num(d.t_ns)
      ) {
        return d as unknown as HelloMsg;
      }
      return null;
    case "telemetry": {
      const needed = [
        "uav_id", "seq", "lat", "lon", "alt_m", "vx", "vy", "vz",
        "heading_deg", "battery_pct", "t_gen_ns",
      ];
      if (needed.every((k) => num(d[k])) && str(d.mode)) {
        return d as unknown as TelemetryMsg;
      }
      return null;
    }
    case "cmd_status":
      if (
        num(d.cmd_id) &&
        num(d.uav_id) &&
        str(d.kind) &&
        (d.status === "pending" || d.status === "ack" || d.status === "nack") &&
        str(d.reason) &&
        num(d.t_ns)
      ) {
        return d as unknown as CmdStatusMsg;
      }
      return null;
    case "metric":
      if (num(d.value) && num(d.t_ns) && str(d.name)) {
        return d as unknown as MetricMsg;
      }
      return null;
    case "freeze":
      if ((d.state === "frozen" || d.state === "active") && num(d.t_ns)) {
        return d as unknown as FreezeMsg;
      }
      return null;
    case "error":
      if (str(d.error)) return d as unknown as ErrorMsg;
      return null;
    default:
      return null;
  }
}
