/** Gateway connection with automatic reconnect.
 *
 * The socket and timers are injected so the whole lifecycle is testable
 * without a browser or a server.
 */

import type { ServerMsg } from "./protocol.js";
import { parseServerMsg } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnEvent = "connecting" | "open" | "closed";

export interface ClientHooks {
  onMessage(msg: ServerMsg): void;
  onConn(state: ConnEvent): void;
  /** Called for frames that fail to parse. */
  onBadFrame?(raw: unknown): void;
}

export interface ClientOpts {
  url: string;
  factory: SocketFactory;
  hooks: ClientHooks;
  setTimer?: (fn: () => void, ms: number) => unknown;
  clearTimer?: (handle: unknown) => void;
  backoffMs?: number[];
}

const DEFAULT_BACKOFF_MS = [500, 1000, 2000, 4000, 8000];

export class GatewayClient {
  private sock: SocketLike | null = null;
  private isOpen = false;
  private stopped = false;
  private attempt = 0;
  private pendingTimer: unknown = null;
  private kinds: string[] | null = null;
  private readonly backoff: number[];
  private readonly setTimer: (fn: () => void, ms: number) => unknown;
  private readonly clearTimer: (handle: unknown) => void;

  constructor(private readonly opts: ClientOpts) {
    this.backoff = opts.backoffMs ?? DEFAULT_BACKOFF_MS;
    this.setTimer = opts.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimer = opts.clearTimer ?? ((h) => clearTimeout(h as number));
  }

  start(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    if (this.pendingTimer !== null) {
      this.clearTimer(this.pendingTimer);
      this.pendingTimer = null;
    }
    if (this.sock !== null) {
      const s = this.sock;
      this.sock = null;
      this.isOpen = false;
      s.onclose = null;
      s.close();
    }
    this.opts.hooks.onConn("closed");
  }

  get connected(): boolean {
    return this.isOpen;
  }

  /** Restrict the push feed; re-applied automatically after reconnects. */
  subscribe(kinds: string[]): void {
    this.kinds = kinds.slice();
    this.trySend({ type: "subscribe", kinds: this.kinds });
  }

  sendCommand(uavId: number, kind: string, fields: Record<string, unknown> = {}): boolean {
    return this.trySend({ type: "command", uav_id: uavId, kind, ...fields });
  }

  private trySend(obj: Record<string, unknown>): boolean {
    if (this.sock === null || !this.isOpen) return false;
    try {
      this.sock.send(JSON.stringify(obj));
      return true;
    } catch {
      return false;
    }
  }

  private open(): void {
    if (this.stopped) return;
    this.opts.hooks.onConn("connecting");
    const sock = this.opts.factory(this.opts.url);
    this.sock = sock;
    sock.onopen = () => {
      if (this.sock !== sock) return;
      this.attempt = 0;
      this.isOpen = true;
      this.opts.hooks.onConn("open");
      if (this.kinds !== null) {
        this.trySend({ type: "subscribe", kinds: this.kinds });
      }
    };
    sock.onmessage = (ev) => {
      if (this.sock !== sock) return;
      const msg = parseServerMsg(ev.data);
      if (msg === null) {
        this.opts.hooks.onBadFrame?.(ev.data);
        return;
      }
      this.opts.hooks.onMessage(msg);
    };
    const onGone = () => {
      if (this.sock !== sock) return;
      this.sock = null;
      this.isOpen = false;
      this.opts.hooks.onConn("closed");
      this.scheduleReconnect();
    };
    sock.onclose = onGone;
    sock.onerror = onGone;
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.pendingTimer !== null) return;
    const idx = Math.min(this.attempt, this.backoff.length - 1);
    const delay = this.backoff[idx] as number;
    this.attempt += 1;
    this.pendingTimer = this.setTimer(() => {
      this.pendingTimer = null;
      this.open();
    }, delay);
  }
}
