/** Rolling strip chart over simulation time with freeze-span shading. */

import type { Ring } from "../ring.js";
import type { FreezeSpan, SeriesPoint } from "../store.js";
import type { Ctx2DLike } from "./types.js";

const PAD_L = 44;
const PAD_R = 8;
const PAD_T = 18;
const PAD_B = 16;
const PALETTE = ["#4fc3f7", "#aed581", "#ffb74d", "#f06292", "#9575cd",
  "#4db6ac"];

export interface ChartOpts {
  title: string;
  unit: string;
  windowNs: number;
}

export class RollingChart {
  constructor(private readonly opts: ChartOpts) {}

  draw(
    ctx: Ctx2DLike,
    w: number,
    h: number,
    series: Map<string, Ring<SeriesPoint>>,
    freezeSpans: readonly FreezeSpan[],
    nowNs: number,
  ): void {
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    ctx.fillStyle = "#8fa3b0";
    ctx.font = "11px sans-serif";
    ctx.fillText(this.opts.title, PAD_L, 12);

    const t1 = nowNs;
    const t0 = t1 - this.opts.windowNs;
    const plotW = w - PAD_L - PAD_R;
    const plotH = h - PAD_T - PAD_B;
    if (plotW <= 0 || plotH <= 0) return;

    const visible: Array<[string, SeriesPoint[]]> = [];
    let lo = Number.POSITIVE_INFINITY;
    let hi = Number.NEGATIVE_INFINITY;
    for (const [key, ring] of series) {
      const pts = ring.values().filter((p) => p.tNs >= t0 && p.tNs <= t1);
      if (pts.length === 0) continue;
      visible.push([key, pts]);
      for (const p of pts) {
        lo = Math.min(lo, p.v);
        hi = Math.max(hi, p.v);
      }
    }
    if (visible.length === 0) {
      lo = 0;
      hi = 1;
    } else if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const pad = (hi - lo) * 0.1;
      lo -= pad;
      hi += pad;
    }

    const X = (tNs: number): number =>
      PAD_L + ((tNs - t0) / (t1 - t0)) * plotW;
    const Y = (v: number): number =>
      PAD_T + (1 - (v - lo) / (hi - lo)) * plotH;

    // freeze spans first so the data draws on top of the shading
    for (const span of freezeSpans) {
      const s = Math.max(span.startNs, t0);
      const e = Math.min(span.endNs ?? t1, t1);
      if (e <= s) continue;
      ctx.save();
      ctx.globalAlpha = 0.22;
      ctx.fillStyle = "#ef5350";
      ctx.fillRect(X(s), PAD_T, Math.max(X(e) - X(s), 1), plotH);
      ctx.restore();
    }

    ctx.strokeStyle = "#2a3642";
    ctx.lineWidth = 1;
    ctx.strokeRect(PAD_L, PAD_T, plotW, plotH);
    ctx.fillStyle = "#617584";
    ctx.fillText(`${hi.toFixed(1)} ${this.opts.unit}`, 2, PAD_T + 9);
    ctx.fillText(`${lo.toFixed(1)}`, 2, PAD_T + plotH);

    visible.forEach(([key, pts], i) => {
      const color = PALETTE[i % PALETTE.length] as string;
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.3;
      ctx.beginPath();
      pts.forEach((p, j) => {
        if (j === 0) ctx.moveTo(X(p.tNs), Y(p.v));
        else ctx.lineTo(X(p.tNs), Y(p.v));
      });
      ctx.stroke();
      ctx.fillStyle = color;
      ctx.fillText(key, PAD_L + 6 + i * 90, PAD_T + 10);
    });
  }
}
