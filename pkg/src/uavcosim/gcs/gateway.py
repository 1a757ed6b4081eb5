"""WebSocket gateway exposing a live run to external user interfaces.

One socket per client. Outbound JSON messages:

    {"type": "hello", "scenario": ..., "uavs": [...], "t_ns": ...}
    {"type": "telemetry", "uav_id": ..., "lat": ..., "lon": ..., "alt_m": ...,
     "vx": ..., "vy": ..., "vz": ..., "heading_deg": ..., "battery_pct": ...,
     "mode": ..., "seq": ..., "t_gen_ns": ...}
    {"type": "cmd_status", "cmd_id": ..., "uav_id": ..., "kind": ...,
     "status": "pending"|"ack"|"nack", "reason": ..., "t_ns": ...}
    {"type": "metric", "name": "delay_ms"|"rss_dbm", "value": ..., "t_ns": ...,
     "stream"|"node": ...}
    {"type": "freeze", "state": "frozen"|"active", "t_ns": ..., "pause_ns": ...}

Inbound:

    {"type": "command", "uav_id": ..., "kind": ..., ...command fields}
    {"type": "subscribe", "kinds": ["telemetry", "metric", ...]}

Slow clients are not allowed to stall the run: each session has a bounded
queue and messages beyond it are dropped for that session only.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import threading
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from ..bus import Bus
from ..flightsim import Command, CommandError

log = logging.getLogger(__name__)

SESSION_QUEUE_CAP = 1000
ALL_KINDS = frozenset({"telemetry", "cmd_status", "metric", "freeze"})


class _Session:
    def __init__(self, queue: asyncio.Queue):
        self.queue = queue
        self.kinds = set(ALL_KINDS)
        self.dropped = 0

    def offer(self, msg: dict):
        if msg["type"] not in self.kinds:
            return
        try:
            self.queue.put_nowait(msg)
        except asyncio.QueueFull:
            self.dropped += 1


class GatewayHub:
    """Fan-out point between the run (kernel thread) and socket sessions."""

    def __init__(self, world):
        self.world = world
        self.sessions: set[_Session] = set()
        self.lock = threading.Lock()
        self.aloop: Optional[asyncio.AbstractEventLoop] = None
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    # -- kernel-side ----------------------------------------------------------

    def start(self):
        self.world.gcs.on_event = self._on_gcs_event
        self._thread = threading.Thread(target=self._bridge, daemon=True,
                                        name="gateway-bridge")
        self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)

    def _bridge(self):
        bus: Bus = self.world.bus
        sub = bus.subscribe("net/gcs/telemetry")
        sys_sub = bus.subscribe("sys")
        try:
            while not self._stop.is_set():
                deadline = bus.clock() + 100_000_000
                for env in sub.poll(deadline):
                    try:
                        d = json.loads(env.payload)
                    except json.JSONDecodeError:
                        continue
                    d["type"] = "telemetry"
                    self._broadcast(d)
                for env in sys_sub.drain():
                    try:
                        d = json.loads(env.payload)
                    except json.JSONDecodeError:
                        continue
                    d["type"] = ("freeze" if env.topic == "sys/freeze"
                                 else "metric")
                    self._broadcast(d)
        finally:
            sub.close()
            sys_sub.close()

    def _on_gcs_event(self, ev: dict):
        if ev.get("type") != "cmd_status":
            return
        rec = ev["rec"]
        self._broadcast({"type": "cmd_status", "cmd_id": rec.cmd_id,
                         "uav_id": rec.uav_id, "kind": rec.kind,
                         "status": rec.status, "reason": rec.reason,
                         "t_ns": rec.t_ack_ns})

    def _broadcast(self, msg: dict):
        if self.aloop is None:
            return
        with self.lock:
            targets = list(self.sessions)
        for s in targets:
            self.aloop.call_soon_threadsafe(s.offer, msg)

    # -- socket-side -----------------------------------------------------------

    def hello(self) -> dict:
        return {"type": "hello", "scenario": self.world.cfg.name,
                "uavs": sorted(self.world.fleet.uavs),
                "t_ns": self.world.loop.now_ns()}

    def handle_inbound(self, msg: dict) -> Optional[dict]:
        kind = msg.get("type")
        if kind == "subscribe":
            return None  # handled per-session by the socket route
        if kind != "command":
            return {"type": "error", "error": f"unknown message type {kind!r}"}
        try:
            uav_id = int(msg["uav_id"])
            if uav_id not in self.world.fleet.uavs:
                raise KeyError(uav_id)
            fields = {k: v for k, v in msg.items()
                      if k not in ("type", "uav_id", "kind")}
            # validate shape before it ever reaches the vehicle
            Command.from_dict({"kind": msg.get("kind"), "cmd_id": 0, **fields})
            cmd_id = self.world.gcs.send_command(uav_id, msg["kind"], **fields)
        except (KeyError, TypeError, ValueError, CommandError) as e:
            return {"type": "error", "error": f"bad command: {e}"}
        return {"type": "cmd_status", "cmd_id": cmd_id, "uav_id": uav_id,
                "kind": msg["kind"], "status": "pending", "reason": "",
                "t_ns": self.world.loop.now_ns()}


def create_app(hub: GatewayHub) -> FastAPI:
    @asynccontextmanager
    async def _lifespan(_app):
        hub.aloop = asyncio.get_running_loop()
        yield

    app = FastAPI(title="uavcosim gateway", lifespan=_lifespan)

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "scenario": hub.world.cfg.name}

    @app.get("/api/uavs")
    async def uavs():
        out = {}
        for uid, uav in sorted(hub.world.fleet.uavs.items()):
            out[uid] = {"mode": uav.mode.value,
                        "battery_pct": uav.battery_pct}
        return out

    @app.websocket("/ws")
    async def ws(sock: WebSocket):
        await sock.accept()
        if hub.aloop is None:
            hub.aloop = asyncio.get_running_loop()
        session = _Session(asyncio.Queue(maxsize=SESSION_QUEUE_CAP))
        with hub.lock:
            hub.sessions.add(session)
        await sock.send_json(hub.hello())

        async def sender():
            while True:
                await sock.send_json(await session.queue.get())

        send_task = asyncio.create_task(sender())
        try:
            while True:
                msg = await sock.receive_json()
                if msg.get("type") == "subscribe":
                    kinds = set(msg.get("kinds", [])) & ALL_KINDS
                    session.kinds = kinds or set(ALL_KINDS)
                    continue
                reply = hub.handle_inbound(msg)
                if reply is not None:
                    await sock.send_json(reply)
        except (WebSocketDisconnect, json.JSONDecodeError):
            pass
        finally:
            send_task.cancel()
            with hub.lock:
                hub.sessions.discard(session)

    ui_dir = os.environ.get("UAVCOSIM_UI_DIR", "frontend/dist")
    if os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve_scenario(cfg, ws_port: int = 8765, out_dir: str = None):
    """Run one scenario with the gateway attached; blocks until it finishes."""
    import uvicorn

    from ..scenario.runner import prepare

    world, finish = prepare(cfg, out_dir=out_dir, realtime=True)
    hub = GatewayHub(world)
    app = create_app(hub)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1",
                                           port=ws_port, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True, name="gateway")
    thread.start()
    hub.start()
    log.info("gateway on ws://127.0.0.1:%d/ws", ws_port)
    try:
        world.loop.run()
    except KeyboardInterrupt:
        world.loop.stop()
    finally:
        hub.stop()
        server.should_exit = True
        thread.join(timeout=3.0)
    result = finish()
    if out_dir:
        log.info("artifacts in %s", out_dir)
    return result
