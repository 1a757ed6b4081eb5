/** Top-down local-frame map: grid, home cross, vehicle trails and markers.
 * The view auto-fits the fleet; clicks convert back to geodetic targets.
 */

import { fromLocal } from "../geo.js";
import type { Geo } from "../geo.js";
import type { FleetStore, UavView } from "../store.js";
import type { Ctx2DLike } from "./types.js";

const MARGIN_PX = 36;
const MIN_SPAN_M = 40;
const PALETTE = ["#4fc3f7", "#aed581", "#ffb74d", "#f06292", "#9575cd",
  "#4db6ac", "#fff176", "#a1887f"];

interface Fit {
  scale: number; // px per meter
  midX: number;
  midY: number;
  w: number;
  h: number;
}

export function uavColor(id: number): string {
  return PALETTE[Math.abs(id) % PALETTE.length] as string;
}

export class MapRenderer {
  private fit: Fit | null = null;

  constructor(private readonly store: FleetStore) {}

  draw(ctx: Ctx2DLike, w: number, h: number, selectedId: number | null): void {
    const fit = this.computeFit(w, h);
    this.fit = fit;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    this.drawGrid(ctx, fit);
    this.drawHome(ctx, fit);
    for (const u of this.store.uavs.values()) {
      this.drawUav(ctx, fit, u, u.id === selectedId);
    }
  }

  /** Pixel -> geodetic, using the transform of the latest draw. */
  pixelToGeo(px: number, py: number): Geo | null {
    if (this.fit === null || this.store.origin === null) return null;
    const { scale, midX, midY, w, h } = this.fit;
    const x = midX + (px - w / 2) / scale;
    const y = midY - (py - h / 2) / scale;
    return fromLocal(this.store.origin, { x, y });
  }

  toPixel(x: number, y: number): { px: number; py: number } | null {
    if (this.fit === null) return null;
    const { scale, midX, midY, w, h } = this.fit;
    return { px: w / 2 + (x - midX) * scale, py: h / 2 - (y - midY) * scale };
  }

  private computeFit(w: number, h: number): Fit {
    let minX = 0, maxX = 0, minY = 0, maxY = 0; // home is always in view
    for (const u of this.store.uavs.values()) {
      minX = Math.min(minX, u.local.x);
      maxX = Math.max(maxX, u.local.x);
      minY = Math.min(minY, u.local.y);
      maxY = Math.max(maxY, u.local.y);
    }
    const spanX = Math.max(maxX - minX, MIN_SPAN_M);
    const spanY = Math.max(maxY - minY, MIN_SPAN_M);
    const scale = Math.min(
      (w - 2 * MARGIN_PX) / spanX,
      (h - 2 * MARGIN_PX) / spanY,
    );
    return {
      scale: Math.max(scale, 1e-6),
      midX: (minX + maxX) / 2,
      midY: (minY + maxY) / 2,
      w,
      h,
    };
  }

  private gridStepM(fit: Fit): number {
    // pick the smallest decade-ish step that stays >= 40 px apart
    for (const step of [1, 2, 5, 10, 25, 50, 100, 250, 500, 1000]) {
      if (step * fit.scale >= 40) return step;
    }
    return 2000;
  }

  private drawGrid(ctx: Ctx2DLike, fit: Fit): void {
    const step = this.gridStepM(fit);
    const halfW = fit.w / 2 / fit.scale;
    const halfH = fit.h / 2 / fit.scale;
    ctx.strokeStyle = "#1f2833";
    ctx.lineWidth = 1;
    ctx.fillStyle = "#44525f";
    ctx.font = "10px sans-serif";
    const x0 = Math.floor((fit.midX - halfW) / step) * step;
    for (let gx = x0; gx <= fit.midX + halfW; gx += step) {
      const p = this.pixelOf(fit, gx, fit.midY);
      ctx.beginPath();
      ctx.moveTo(p.px, 0);
      ctx.lineTo(p.px, fit.h);
      ctx.stroke();
      ctx.fillText(`${gx} m`, p.px + 2, fit.h - 4);
    }
    const y0 = Math.floor((fit.midY - halfH) / step) * step;
    for (let gy = y0; gy <= fit.midY + halfH; gy += step) {
      const p = this.pixelOf(fit, fit.midX, gy);
      ctx.beginPath();
      ctx.moveTo(0, p.py);
      ctx.lineTo(fit.w, p.py);
      ctx.stroke();
      ctx.fillText(`${gy} m`, 4, p.py - 2);
    }
  }

  private drawHome(ctx: Ctx2DLike, fit: Fit): void {
    const p = this.pixelOf(fit, 0, 0);
    ctx.strokeStyle = "#607d8b";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(p.px - 7, p.py);
    ctx.lineTo(p.px + 7, p.py);
    ctx.moveTo(p.px, p.py - 7);
    ctx.lineTo(p.px, p.py + 7);
    ctx.stroke();
    ctx.fillStyle = "#607d8b";
    ctx.fillText("home", p.px + 9, p.py - 4);
  }

  private drawUav(ctx: Ctx2DLike, fit: Fit, u: UavView, selected: boolean): void {
    const color = uavColor(u.id);
    ctx.save();
    ctx.globalAlpha = u.stale ? 0.35 : 1.0;

    if (u.trail.length > 1) {
      ctx.strokeStyle = color;
      ctx.lineWidth = 1;
      ctx.setLineDash([3, 3]);
      ctx.beginPath();
      const first = u.trail[0] as { x: number; y: number };
      const f = this.pixelOf(fit, first.x, first.y);
      ctx.moveTo(f.px, f.py);
      for (const t of u.trail.slice(1)) {
        const p = this.pixelOf(fit, t.x, t.y);
        ctx.lineTo(p.px, p.py);
      }
      ctx.stroke();
      ctx.setLineDash([]);
    }

    const p = this.pixelOf(fit, u.local.x, u.local.y);
    ctx.save();
    ctx.translate(p.px, p.py);
    ctx.rotate((u.headingDeg * Math.PI) / 180);
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(0, -12);
    ctx.lineTo(0, -6);
    ctx.stroke();
    ctx.restore();

    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(p.px, p.py, selected ? 7 : 5, 0, 2 * Math.PI);
    ctx.fill();
    if (selected) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(p.px, p.py, 10, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.font = "11px sans-serif";
    ctx.fillText(
      `#${u.id} ${u.mode} ${u.altM.toFixed(1)} m`,
      p.px + 12,
      p.py + 4,
    );
    ctx.restore();
  }

  private pixelOf(fit: Fit, x: number, y: number): { px: number; py: number } {
    return {
      px: fit.w / 2 + (x - fit.midX) * fit.scale,
      py: fit.h / 2 - (y - fit.midY) * fit.scale,
    };
  }
}
