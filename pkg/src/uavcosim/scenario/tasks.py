"""Event-loop tasks that animate one run.

UavTask glues a vehicle to the loop: a fixed-cadence tick drives the
kinematics, delivered command payloads are applied at their release event,
and telemetry goes out on the vehicle topic. ControlPinger generates the
steady command-channel traffic from the ground side.

Freeze semantics: a frozen task lets its tick chain lapse and leaves inbound
messages queued; resume restores the snapshot, drains the queue, and restarts
the chain. Ground-side generators keep running while vehicles are frozen.
"""

from __future__ import annotations

import logging
import struct
from typing import Optional

from ..bus import Bus, Endpoint
from ..flightsim import Command, CommandError, FlightSnapshot, Uav
from ..kernel import EventLoop

log = logging.getLogger(__name__)


class UavTask:
    def __init__(self, loop: EventLoop, bus: Bus, uav: Uav,
                 tick_ns: int, telemetry_stream: str):
        self.loop = loop
        self.uav = uav
        self.tick_ns = tick_ns
        self.telemetry_stream = telemetry_stream
        self.telemetry_topic = f"uav/{uav.uav_id}/telemetry"
        self.endpoint: Endpoint = bus.endpoint(f"uav:{uav.uav_id}")
        self.sub = bus.subscribe(f"net/uav/{uav.uav_id}")
        self.sub.set_waker(
            lambda: self.loop.call_soon(self._pump, kind="uav-pump"))
        self.frozen = False
        self.ctrl_rx = 0
        self.malformed = 0
        self._snapshot: Optional[FlightSnapshot] = None

    def start(self, t0_ns: int = 0):
        self.loop.call_at(t0_ns, self._tick, t0_ns, kind="uav-tick")

    def _pump(self):
        if self.frozen:
            return  # payloads stay queued until resume
        for env in self.sub.drain():
            if env.topic.endswith("/cmd"):
                try:
                    self.uav.handle_command(Command.from_payload(env.payload))
                except CommandError as e:
                    self.malformed += 1
                    log.warning("uav %d got malformed command: %s",
                                self.uav.uav_id, e)
            else:
                self.ctrl_rx += 1

    def _tick(self, due_ns: int):
        if self.frozen:
            return  # resume() restarts the chain
        tel = self.uav.step(self.tick_ns / 1e9)
        if tel is not None:
            self.endpoint.publish(self.telemetry_topic, tel.to_payload(),
                                  stream_id=self.telemetry_stream)
        nxt = due_ns + self.tick_ns
        self.loop.call_at(nxt, self._tick, nxt, kind="uav-tick")

    def freeze(self):
        if not self.frozen:
            self.frozen = True
            self._snapshot = self.uav.freeze()

    def resume(self, pause_ns: int):
        if self.frozen:
            self.uav.resume(self._snapshot, pause_ns)
            self._snapshot = None
            self.frozen = False
            self._pump()
            nxt = self.loop.now_ns() + self.tick_ns
            self.loop.call_at(nxt, self._tick, nxt, kind="uav-tick")


class ControlPinger:
    """Fixed-rate ground-to-vehicle traffic on the command channel."""

    def __init__(self, loop: EventLoop, endpoint: Endpoint, topic: str,
                 stream_id: str, rate_hz: float, payload_bytes: int):
        self.loop = loop
        self.endpoint = endpoint
        self.topic = topic
        self.stream_id = stream_id
        self.period_ns = round(1e9 / rate_hz)
        self.payload_bytes = max(payload_bytes, 4)
        self.sent = 0

    def start(self, t0_ns: int = 0):
        self.loop.call_at(t0_ns, self._emit, t0_ns, kind="ctrl-ping")

    def _emit(self, due_ns: int):
        body = struct.pack("<I", self.sent & 0xFFFFFFFF)
        body += b"\x00" * (self.payload_bytes - len(body))
        self.endpoint.publish(self.topic, body, stream_id=self.stream_id)
        self.sent += 1
        nxt = due_ns + self.period_ns
        self.loop.call_at(nxt, self._emit, nxt, kind="ctrl-ping")
