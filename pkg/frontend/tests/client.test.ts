import { beforeEach, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/client.js";
import type { ConnEvent } from "../src/client.js";
import type { ServerMsg } from "../src/protocol.js";
import { ManualTimers, MockSocket, telemetry } from "./helpers.js";

interface Rig {
  client: GatewayClient;
  timers: ManualTimers;
  conns: ConnEvent[];
  msgs: ServerMsg[];
  bad: unknown[];
  sock(): MockSocket;
}

function rig(backoffMs?: number[]): Rig {
  const timers = new ManualTimers();
  const conns: ConnEvent[] = [];
  const msgs: ServerMsg[] = [];
  const bad: unknown[] = [];
  const client = new GatewayClient({
    url: "ws://test/ws",
    factory: (url) => new MockSocket(url),
    hooks: {
      onMessage: (m) => msgs.push(m),
      onConn: (s) => conns.push(s),
      onBadFrame: (r) => bad.push(r),
    },
    setTimer: timers.set,
    clearTimer: timers.clear,
    backoffMs,
  });
  return {
    client, timers, conns, msgs, bad,
    sock: () => {
      const s = MockSocket.instances[MockSocket.instances.length - 1];
      if (s === undefined) throw new Error("no socket opened yet");
      return s;
    },
  };
}

beforeEach(() => MockSocket.reset());

describe("GatewayClient", () => {
  it("connects, reports state, and dispatches parsed frames", () => {
    const r = rig();
    r.client.start();
    expect(r.conns).toEqual(["connecting"]);
    expect(r.client.connected).toBe(false);

    r.sock().serverOpen();
    expect(r.conns).toEqual(["connecting", "open"]);
    expect(r.client.connected).toBe(true);

    r.sock().serverSend(telemetry({ seq: 3 }));
    r.sock().serverSend("{ not json");
    r.sock().serverSend({ type: "warp", t_ns: 1 });
    expect(r.msgs).toHaveLength(1);
    expect(r.msgs[0]).toMatchObject({ type: "telemetry", seq: 3 });
    expect(r.bad).toHaveLength(2);
  });

  it("serializes commands and refuses them while disconnected", () => {
    const r = rig();
    r.client.start();
    expect(r.client.sendCommand(1, "arm")).toBe(false);

    r.sock().serverOpen();
    expect(
      r.client.sendCommand(2, "goto", { lat: 33.64, lon: -117.84, alt_m: 7 }),
    ).toBe(true);
    const sent = r.sock().sent.map((s) => JSON.parse(s) as Record<string, unknown>);
    expect(sent).toEqual([
      { type: "command", uav_id: 2, kind: "goto", lat: 33.64, lon: -117.84, alt_m: 7 },
    ]);
  });

  it("replays the subscription filter on every (re)connect", () => {
    const r = rig();
    r.client.start();
    r.client.subscribe(["telemetry", "cmd_status"]); // socket not open yet
    expect(r.sock().sent).toHaveLength(0);

    r.sock().serverOpen();
    expect(JSON.parse(r.sock().sent[0] ?? "")).toEqual({
      type: "subscribe", kinds: ["telemetry", "cmd_status"],
    });

    r.sock().serverClose();
    r.timers.runNext();
    r.sock().serverOpen();
    expect(JSON.parse(r.sock().sent[0] ?? "")).toEqual({
      type: "subscribe", kinds: ["telemetry", "cmd_status"],
    });
  });

  it("reconnects with growing, capped backoff and resets after success", () => {
    const r = rig([100, 200, 400]);
    r.client.start();

    // three failed cycles: delays grow then stay at the cap
    const seen: number[] = [];
    for (let i = 0; i < 4; i++) {
      r.sock().serverClose();
      expect(r.timers.pending).toHaveLength(1);
      seen.push(r.timers.pending[0] as number);
      r.timers.runNext();
    }
    expect(seen).toEqual([100, 200, 400, 400]);
    expect(MockSocket.instances).toHaveLength(5);

    // a successful open resets the ladder
    r.sock().serverOpen();
    expect(r.client.connected).toBe(true);
    r.sock().serverClose();
    expect(r.timers.pending).toEqual([100]);
    expect(r.client.connected).toBe(false);
  });

  it("ignores events from sockets it has already abandoned", () => {
    const r = rig([100]);
    r.client.start();
    const first = r.sock();
    first.serverClose();
    r.timers.runNext();
    const second = r.sock();
    expect(second).not.toBe(first);

    first.serverSend(telemetry());
    first.serverClose();
    expect(r.msgs).toHaveLength(0);
    expect(r.timers.pending).toHaveLength(0); // no duplicate reconnect queued

    second.serverOpen();
    second.serverSend(telemetry());
    expect(r.msgs).toHaveLength(1);
  });

  it("stop() cancels reconnects and closes the socket for good", () => {
    const r = rig([100]);
    r.client.start();
    r.sock().serverClose();
    expect(r.timers.pending).toEqual([100]);

    r.client.stop();
    expect(r.timers.pending).toEqual([]);
    expect(r.client.connected).toBe(false);
    expect(r.client.sendCommand(1, "land")).toBe(false);
    expect(MockSocket.instances).toHaveLength(1);
  });
});
