import { describe, expect, it } from "vitest";

import { parseServerMsg } from "../src/protocol.js";
import { cmdStatus, telemetry } from "./helpers.js";

describe("parseServerMsg", () => {
  it("accepts every documented message kind", () => {
    const frames = [
      JSON.stringify({ type: "hello", scenario: "cs1", uavs: [1, 2], t_ns: 0 }),
      telemetry(),
      cmdStatus(),
      JSON.stringify({
        type: "metric", name: "delay_ms", value: 0.4,
        t_ns: 5, stream: "ctl",
      }),
      JSON.stringify({
        type: "metric", name: "rss_dbm", value: -61.2,
        t_ns: 5, node: "uav:1",
      }),
      JSON.stringify({ type: "freeze", state: "frozen", t_ns: 9 }),
      JSON.stringify({
        type: "freeze", state: "active", t_ns: 12, pause_ns: 3,
      }),
      JSON.stringify({ type: "error", error: "bad command: nope" }),
    ];
    for (const f of frames) {
      const msg = parseServerMsg(f);
      expect(msg, f).not.toBeNull();
    }
    expect(parseServerMsg(telemetry())?.type).toBe("telemetry");
  });

  it("rejects non-strings, bad JSON and unknown types", () => {
    expect(parseServerMsg(new ArrayBuffer(4))).toBeNull();
    expect(parseServerMsg("{half a json")).toBeNull();
    expect(parseServerMsg("42")).toBeNull();
    expect(parseServerMsg("[1,2]")).toBeNull();
    expect(parseServerMsg(JSON.stringify({ type: "warp", x: 1 }))).toBeNull();
  });

  it("rejects structurally broken messages of known types", () => {
    expect(parseServerMsg(telemetry({ lat: "north" }))).toBeNull();
    expect(parseServerMsg(telemetry({ mode: 7 }))).toBeNull();
    expect(parseServerMsg(cmdStatus({ status: "maybe" }))).toBeNull();
    expect(
      parseServerMsg(JSON.stringify({ type: "hello", scenario: "x", uavs: ["a"], t_ns: 0 })),
    ).toBeNull();
    expect(
      parseServerMsg(JSON.stringify({ type: "freeze", state: "warm", t_ns: 0 })),
    ).toBeNull();
    expect(
      parseServerMsg(JSON.stringify({ type: "metric", name: "delay_ms", value: "x", t_ns: 0 })),
    ).toBeNull();
  });

  it("keeps NaN and Infinity out", () => {
    // JSON cannot carry them directly but a buggy sender could send null
    expect(parseServerMsg(telemetry({ alt_m: null }))).toBeNull();
  });
});
