/** Telemetry-to-pixel latency: time from a telemetry frame arriving on the
 * socket to the next paint that could have shown it. The budget is the
 * freshness guarantee the console advertises in its HUD.
 */

import { Ring } from "./ring.js";

export const LATENCY_BUDGET_MS = 200;

export interface LatencyStats {
  count: number;
  p50Ms: number;
  p95Ms: number;
  maxMs: number;
  withinBudget: boolean;
}

export class LatencyMeter {
  private pending: number[] = [];
  private readonly samples: Ring<number>;

  constructor(
    readonly budgetMs: number = LATENCY_BUDGET_MS,
    cap: number = 512,
  ) {
    this.samples = new Ring<number>(cap);
  }

  /** Stamp a telemetry ingest (wall-clock ms). */
  markIngest(nowMs: number): void {
    this.pending.push(nowMs);
  }

  /** Stamp a completed paint; every ingest since the last paint resolves. */
  markPainted(nowMs: number): void {
    for (const t of this.pending) {
      this.samples.push(Math.max(0, nowMs - t));
    }
    this.pending = [];
  }

  stats(): LatencyStats {
    const xs = this.samples.values().slice().sort((a, b) => a - b);
    if (xs.length === 0) {
      return { count: 0, p50Ms: 0, p95Ms: 0, maxMs: 0, withinBudget: true };
    }
    const pick = (q: number): number =>
      xs[Math.min(xs.length - 1, Math.ceil(q * xs.length) - 1)] as number;
    const p95 = pick(0.95);
    return {
      count: xs.length,
      p50Ms: pick(0.5),
      p95Ms: p95,
      maxMs: xs[xs.length - 1] as number,
      withinBudget: p95 <= this.budgetMs,
    };
  }
}
