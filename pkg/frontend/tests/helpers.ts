import type { SocketLike } from "../src/client.js";
import type { ServerMsg } from "../src/protocol.js";
import { parseServerMsg } from "../src/protocol.js";
import type { Ctx2DLike } from "../src/render/types.js";

/** Parse a frame the tests built themselves; throws instead of returning null. */
export function parsed(raw: string): ServerMsg {
  const m = parseServerMsg(raw);
  if (m === null) throw new Error(`test helper built an unparseable frame: ${raw}`);
  return m;
}

/** Scripted stand-in for a WebSocket; tests drive open/close/messages. */
export class MockSocket implements SocketLike {
  static instances: MockSocket[] = [];
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;

  constructor(readonly url: string) {
    MockSocket.instances.push(this);
  }

  send(data: string): void {
    if (this.closed) throw new Error("send on closed socket");
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  // test-side controls
  serverOpen(): void {
    this.onopen?.();
  }

  serverSend(obj: unknown): void {
    this.onmessage?.({
      data: typeof obj === "string" ? obj : JSON.stringify(obj),
    });
  }

  serverClose(): void {
    this.onclose?.();
  }

  static reset(): void {
    MockSocket.instances = [];
  }
}

/** Deterministic replacement for setTimeout; run timers by hand. */
export class ManualTimers {
  private queue: Array<{ fn: () => void; ms: number; id: number }> = [];
  private next = 1;

  set = (fn: () => void, ms: number): unknown => {
    const id = this.next++;
    this.queue.push({ fn, ms, id });
    return id;
  };

  clear = (handle: unknown): void => {
    this.queue = this.queue.filter((t) => t.id !== handle);
  };

  get pending(): number[] {
    return this.queue.map((t) => t.ms);
  }

  /** Fire the oldest pending timer. */
  runNext(): void {
    const t = this.queue.shift();
    if (t === undefined) throw new Error("no pending timer");
    t.fn();
  }
}

export interface CtxOp {
  op: string;
  args: unknown[];
  fillStyle: string;
  strokeStyle: string;
  globalAlpha: number;
}

/** Records every drawing call with the style active at the time. */
export class FakeCtx implements Ctx2DLike {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";
  ops: CtxOp[] = [];

  private rec(op: string, ...args: unknown[]): void {
    this.ops.push({
      op, args,
      fillStyle: this.fillStyle,
      strokeStyle: this.strokeStyle,
      globalAlpha: this.globalAlpha,
    });
  }

  clearRect(...a: [number, number, number, number]): void { this.rec("clearRect", ...a); }
  fillRect(...a: [number, number, number, number]): void { this.rec("fillRect", ...a); }
  strokeRect(...a: [number, number, number, number]): void { this.rec("strokeRect", ...a); }
  beginPath(): void { this.rec("beginPath"); }
  moveTo(...a: [number, number]): void { this.rec("moveTo", ...a); }
  lineTo(...a: [number, number]): void { this.rec("lineTo", ...a); }
  arc(...a: [number, number, number, number, number]): void { this.rec("arc", ...a); }
  stroke(): void { this.rec("stroke"); }
  fill(): void { this.rec("fill"); }
  fillText(...a: [string, number, number]): void { this.rec("fillText", ...a); }
  save(): void { this.rec("save"); }
  restore(): void { this.rec("restore"); }
  translate(...a: [number, number]): void { this.rec("translate", ...a); }
  rotate(...a: [number]): void { this.rec("rotate", ...a); }
  setLineDash(...a: [number[]]): void { this.rec("setLineDash", ...a); }

  calls(op: string): CtxOp[] {
    return this.ops.filter((o) => o.op === op);
  }
}

export function telemetry(over: Record<string, unknown> = {}): string {
  return JSON.stringify({
    type: "telemetry",
    uav_id: 1, seq: 0,
    lat: 33.6405, lon: -117.8443, alt_m: 5.0,
    vx: 0, vy: 0, vz: 0,
    heading_deg: 90, battery_pct: 99.5, mode: "hovering",
    t_gen_ns: 1_000_000_000,
    ...over,
  });
}

export function cmdStatus(over: Record<string, unknown> = {}): string {
  return JSON.stringify({
    type: "cmd_status",
    cmd_id: 1, uav_id: 1, kind: "arm",
    status: "pending", reason: "", t_ns: 2_000_000_000,
    ...over,
  });
}
