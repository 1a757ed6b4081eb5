/** Browser entry point: wires the gateway client, store, renderers and DOM.
 * Everything with logic worth testing lives in the imported modules; this
 * file is only glue.
 */

import { GatewayClient } from "./client.js";
import type { SocketFactory, SocketLike } from "./client.js";
import { LatencyMeter } from "./latency.js";
import { RollingChart } from "./render/chart.js";
import { MapRenderer, uavColor } from "./render/map.js";
import type { Ctx2DLike } from "./render/types.js";
import { FleetStore } from "./store.js";

const store = new FleetStore();
const meter = new LatencyMeter();
const mapRenderer = new MapRenderer(store);
const delayChart = new RollingChart({
  title: "stream delay", unit: "ms", windowNs: 30e9,
});
const rssChart = new RollingChart({
  title: "link RSS", unit: "dBm", windowNs: 30e9,
});

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
};

const mapCanvas = $("map") as HTMLCanvasElement;
const delayCanvas = $("chart-delay") as HTMLCanvasElement;
const rssCanvas = $("chart-rss") as HTMLCanvasElement;
const uavSelect = $("uav-select") as HTMLSelectElement;
const speedInput = $("speed") as HTMLInputElement;
const cmdBody = $("cmdlog-body");

const ctxOf = (c: HTMLCanvasElement): Ctx2DLike =>
  c.getContext("2d") as unknown as Ctx2DLike;

const wsFactory: SocketFactory = (url) => {
  const ws = new WebSocket(url);
  const s: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onopen: null,
    onclose: null,
    onerror: null,
    onmessage: null,
  };
  ws.onopen = () => s.onopen?.();
  ws.onclose = () => s.onclose?.();
  ws.onerror = () => s.onerror?.();
  ws.onmessage = (ev) => s.onmessage?.({ data: ev.data });
  return s;
};

let badFrames = 0;

async function refreshFleetSnapshot(): Promise<void> {
  try {
    const res = await fetch("/api/uavs");
    if (res.ok) {
      store.applyRestSnapshot(await res.json());
    }
  } catch {
    // transient; the push feed will repopulate everything anyway
  }
}

const scheme = location.protocol === "https:" ? "wss" : "ws";
const client = new GatewayClient({
  url: `${scheme}://${location.host}/ws`,
  factory: wsFactory,
  hooks: {
    onMessage: (msg) => {
      store.apply(msg);
      if (msg.type === "telemetry") meter.markIngest(performance.now());
    },
    onConn: (state) => {
      store.setConn(state);
      if (state === "open") void refreshFleetSnapshot();
    },
    onBadFrame: () => {
      badFrames += 1;
    },
  },
});

function selectedUav(): number | null {
  const v = Number(uavSelect.value);
  return Number.isInteger(v) && v > 0 ? v : null;
}

function syncUavOptions(): void {
  const sig = store.uavIds.join(",");
  if (uavSelect.dataset.sig === sig) return;
  uavSelect.dataset.sig = sig;
  const keep = uavSelect.value;
  uavSelect.innerHTML = "";
  for (const id of store.uavIds) {
    const opt = document.createElement("option");
    opt.value = String(id);
    opt.textContent = `UAV ${id}`;
    uavSelect.appendChild(opt);
  }
  if (store.uavIds.map(String).includes(keep)) uavSelect.value = keep;
}

function syncCommandLog(): void {
  const rows = store.commands.slice(0, 14);
  const sig = rows.map((e) => `${e.cmdId}:${e.status}`).join("|");
  if (cmdBody.dataset.sig === sig) return;
  cmdBody.dataset.sig = sig;
  cmdBody.innerHTML = "";
  for (const e of rows) {
    const tr = document.createElement("tr");
    tr.className = `st-${e.status}`;
    const t = (e.tNs / 1e9).toFixed(2);
    tr.innerHTML =
      `<td>${t}s</td><td>#${e.cmdId}</td><td>${e.uavId}</td>` +
      `<td>${e.kind}</td><td>${e.status}</td><td>${e.reason}</td>`;
    cmdBody.appendChild(tr);
  }
}

function syncHud(): void {
  $("scenario").textContent = store.scenario || "(waiting)";
  const conn = $("conn");
  conn.textContent = store.conn;
  conn.className = `badge conn-${store.conn}`;
  $("freeze").classList.toggle("hidden", !store.frozen);
  const s = meter.stats();
  const lat = $("latency");
  lat.textContent = s.count === 0
    ? "px-lat: warming up"
    : `px-lat p95 ${s.p95Ms.toFixed(0)} ms / budget ${meter.budgetMs} ms`;
  lat.className = s.withinBudget ? "lat-ok" : "lat-over";
  const err = store.errors[0];
  $("lasterr").textContent = err !== undefined
    ? `last error: ${err}`
    : (badFrames > 0 ? `${badFrames} unparseable frames` : "");
}

function frame(): void {
  syncUavOptions();
  syncCommandLog();
  syncHud();
  mapRenderer.draw(
    ctxOf(mapCanvas), mapCanvas.width, mapCanvas.height, selectedUav(),
  );
  delayChart.draw(
    ctxOf(delayCanvas), delayCanvas.width, delayCanvas.height,
    store.delaySeries, store.freezeSpans, store.lastTNs,
  );
  rssChart.draw(
    ctxOf(rssCanvas), rssCanvas.width, rssCanvas.height,
    store.rssSeries, store.freezeSpans, store.lastTNs,
  );
  meter.markPainted(performance.now());
  requestAnimationFrame(frame);
}

mapCanvas.addEventListener("click", (ev) => {
  const uav = selectedUav();
  if (uav === null) return;
  const rect = mapCanvas.getBoundingClientRect();
  const px = ((ev.clientX - rect.left) / rect.width) * mapCanvas.width;
  const py = ((ev.clientY - rect.top) / rect.height) * mapCanvas.height;
  const geo = mapRenderer.pixelToGeo(px, py);
  if (geo === null) return;
  const alt = store.uavs.get(uav)?.altM ?? 5;
  client.sendCommand(uav, "goto", {
    lat: geo.lat, lon: geo.lon, alt_m: Math.max(alt, 2),
  });
});

$("btn-arm").addEventListener("click", () => {
  const uav = selectedUav();
  if (uav !== null) client.sendCommand(uav, "arm");
});
$("btn-takeoff").addEventListener("click", () => {
  const uav = selectedUav();
  if (uav !== null) client.sendCommand(uav, "takeoff", { alt_m: 5.0 });
});
$("btn-land").addEventListener("click", () => {
  const uav = selectedUav();
  if (uav !== null) client.sendCommand(uav, "land");
});
$("btn-speed").addEventListener("click", () => {
  const uav = selectedUav();
  const speed = Number(speedInput.value);
  if (uav !== null && Number.isFinite(speed) && speed > 0) {
    client.sendCommand(uav, "set_speed", { speed });
  }
});

uavSelect.addEventListener("change", () => {
  const uav = selectedUav();
  if (uav !== null) {
    const swatch = $("uav-swatch");
    swatch.style.background = uavColor(uav);
  }
});

client.start();
requestAnimationFrame(frame);
