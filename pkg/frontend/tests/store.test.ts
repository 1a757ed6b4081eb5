import { describe, expect, it } from "vitest";

import { parseServerMsg } from "../src/protocol.js";
import type { ServerMsg } from "../src/protocol.js";
import { FleetStore, TRAIL_CAP } from "../src/store.js";
import { cmdStatus, telemetry } from "./helpers.js";

function msg(raw: string): ServerMsg {
  const m = parseServerMsg(raw);
  if (m === null) throw new Error(`helper produced unparseable frame: ${raw}`);
  return m;
}

describe("FleetStore", () => {
  it("builds vehicle state from telemetry and keeps a capped trail", () => {
    const st = new FleetStore();
    st.apply(msg(telemetry({ lat: 33.6405, lon: -117.8443, seq: 0 })));
    expect(st.origin).toEqual({ lat: 33.6405, lon: -117.8443 });
    expect(st.uavs.get(1)?.local.x).toBeCloseTo(0, 6);

    for (let i = 1; i <= TRAIL_CAP + 50; i++) {
      // ~1 m east per update, far over the trail's minimum step
      st.apply(msg(telemetry({
        seq: i, lon: -117.8443 + i * 1.2e-5, t_gen_ns: i * 1e7,
      })));
    }
    const u = st.uavs.get(1);
    expect(u).toBeDefined();
    expect(u!.trail.length).toBeLessThanOrEqual(TRAIL_CAP);
    expect(u!.seq).toBe(TRAIL_CAP + 50);
    expect(u!.local.x).toBeGreaterThan(100);
    expect(st.telemetryCount).toBe(TRAIL_CAP + 51);
  });

  it("tracks command lifecycle pending -> ack in place", () => {
    const st = new FleetStore();
    st.apply(msg(cmdStatus({ cmd_id: 7, status: "pending" })));
    st.apply(msg(cmdStatus({ cmd_id: 8, status: "pending", kind: "takeoff" })));
    st.apply(msg(cmdStatus({ cmd_id: 7, status: "ack", t_ns: 3e9 })));
    expect(st.commands).toHaveLength(2);
    const seven = st.commands.find((e) => e.cmdId === 7);
    expect(seven?.status).toBe("ack");
    expect(seven?.tNs).toBe(3e9);
    expect(st.commands[0]?.cmdId).toBe(8); // newest-first ordering kept
  });

  it("keeps nack reasons", () => {
    const st = new FleetStore();
    st.apply(msg(cmdStatus({ cmd_id: 9, status: "nack", reason: "takeoff requires an armed vehicle" })));
    expect(st.commands[0]?.status).toBe("nack");
    expect(st.commands[0]?.reason).toMatch(/armed/);
  });

  it("routes metrics into per-stream and per-node series", () => {
    const st = new FleetStore();
    st.apply(msg(JSON.stringify({
      type: "metric", name: "delay_ms", value: 0.3, t_ns: 1e9, stream: "ctl",
    })));
    st.apply(msg(JSON.stringify({
      type: "metric", name: "rss_dbm", value: -61, t_ns: 1e9, node: "uav:1",
    })));
    st.apply(msg(JSON.stringify({
      type: "metric", name: "delay_ms", value: 0.5, t_ns: 2e9, stream: "ctl",
    })));
    expect(st.delaySeries.get("ctl")?.values().map((p) => p.v)).toEqual([0.3, 0.5]);
    expect(st.rssSeries.get("uav:1")?.length).toBe(1);
    expect(st.lastTNs).toBe(2e9);
  });

  it("opens and closes freeze spans", () => {
    const st = new FleetStore();
    st.apply(msg(JSON.stringify({ type: "freeze", state: "frozen", t_ns: 5e9 })));
    expect(st.frozen).toBe(true);
    expect(st.freezeSpans).toEqual([{ startNs: 5e9, endNs: null }]);
    st.apply(msg(JSON.stringify({
      type: "freeze", state: "active", t_ns: 5.2e9, pause_ns: 0.2e9,
    })));
    expect(st.frozen).toBe(false);
    expect(st.freezeSpans).toEqual([{ startNs: 5e9, endNs: 5.2e9 }]);
  });

  it("marks vehicles stale on disconnect and fresh again on telemetry", () => {
    const st = new FleetStore();
    st.apply(msg(telemetry()));
    expect(st.uavs.get(1)?.stale).toBe(false);
    st.setConn("closed");
    expect(st.uavs.get(1)?.stale).toBe(true);
    st.setConn("open");
    st.apply(msg(telemetry({ seq: 1 })));
    expect(st.uavs.get(1)?.stale).toBe(false);
  });

  it("resets the world when a hello announces a different scenario", () => {
    const st = new FleetStore();
    st.apply(msg(JSON.stringify({ type: "hello", scenario: "a", uavs: [1], t_ns: 1 })));
    st.apply(msg(telemetry()));
    st.apply(msg(cmdStatus()));
    st.apply(msg(JSON.stringify({ type: "hello", scenario: "b", uavs: [3], t_ns: 2 })));
    expect(st.uavs.size).toBe(0);
    expect(st.commands).toHaveLength(0);
    expect(st.uavIds).toEqual([3]);
    expect(st.origin).toBeNull();

    // same scenario again: state is kept (reconnect case)
    st.apply(msg(telemetry({ uav_id: 3 })));
    st.apply(msg(JSON.stringify({ type: "hello", scenario: "b", uavs: [3], t_ns: 9 })));
    expect(st.uavs.size).toBe(1);
  });

  it("merges REST snapshots without disturbing positions", () => {
    const st = new FleetStore();
    st.apply(msg(telemetry()));
    const before = st.uavs.get(1)!.local;
    st.applyRestSnapshot({
      "1": { mode: "moving", battery_pct: 88.5 },
      "2": { mode: "disarmed", battery_pct: 100 },
    });
    expect(st.uavs.get(1)?.mode).toBe("moving");
    expect(st.uavs.get(1)?.batteryPct).toBe(88.5);
    expect(st.uavs.get(1)?.local).toEqual(before);
    expect(st.uavIds).toContain(2); // known id even before first telemetry
  });

  it("collects error messages newest-first", () => {
    const st = new FleetStore();
    st.apply(msg(JSON.stringify({ type: "error", error: "one" })));
    st.apply(msg(JSON.stringify({ type: "error", error: "two" })));
    expect(st.errors[0]).toBe("two");
  });
});
