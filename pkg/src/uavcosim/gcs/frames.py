"""Synthetic video: fragment generation on the vehicle, reassembly on the ground.

A source emits frames on a fixed cadence; every gop-th frame is an I-frame,
the rest are P-frames. Each frame is split into fixed-size fragments carrying
a small binary header (frame seq, fragment index, fragment count, frame type)
and zero padding up to the fragment size, so every packet on the wire has the
same length.

The sink rebuilds frames from whatever fragments arrive. A frame counts as
complete when all its fragments are in; at teardown, frames still missing
fragments are flagged lost. Inter-frame gap is measured between consecutive
frame completions in arrival order, which is what a viewer would experience.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass
from typing import Callable, Optional

from ..bus import Bus, Endpoint, Subscription
from ..kernel import EventLoop

log = logging.getLogger(__name__)

# frame_seq u32, frag_idx u16, n_frags u16, is_iframe u8, pad to 12 bytes
_FRAG_HEADER = struct.Struct("<IHHBxxx")


@dataclass(frozen=True)
class FrameProfile:
    fps: float = 30.0
    gop: int = 12
    i_bytes: int = 12000
    p_bytes: int = 3000
    frag_bytes: int = 1000


def fragment_count(size_bytes: int, frag_bytes: int) -> int:
    return max(1, math.ceil(size_bytes / frag_bytes))


def pack_fragment(frame_seq: int, frag_idx: int, n_frags: int,
                  is_iframe: bool, frag_bytes: int) -> bytes:
    head = _FRAG_HEADER.pack(frame_seq, frag_idx, n_frags, 1 if is_iframe else 0)
    return head + b"\x00" * (frag_bytes - len(head))


def unpack_fragment(payload: bytes) -> tuple[int, int, int, bool]:
    seq, idx, n, iframe = _FRAG_HEADER.unpack_from(payload)
    return seq, idx, n, bool(iframe)


class FrameSource:
    """Emits one frame burst per period on the vehicle-side topic."""

    def __init__(self, loop: EventLoop, endpoint: Endpoint, topic: str,
                 stream_id: str, profile: FrameProfile):
        self.loop = loop
        self.endpoint = endpoint
        self.topic = topic
        self.stream_id = stream_id
        self.profile = profile
        self.period_ns = round(1e9 / profile.fps)
        self.frames_sent = 0
        self.frags_sent = 0
        self.frozen = False
        self._next_due = 0

    def start(self, t0_ns: int = 0):
        self._next_due = t0_ns
        self.loop.call_at(t0_ns, self._emit, kind="frame-src")

    def freeze(self):
        self.frozen = True

    def resume(self, _pause_ns: int):
        self.frozen = False
        self._next_due = self.loop.now_ns() + self.period_ns
        self.loop.call_at(self._next_due, self._emit, kind="frame-src")

    def _emit(self):
        if self.frozen:
            return  # resume() restarts the chain
        p = self.profile
        seq = self.frames_sent
        is_iframe = (seq % p.gop == 0)
        size = p.i_bytes if is_iframe else p.p_bytes
        n = fragment_count(size, p.frag_bytes)
        for idx in range(n):
            self.endpoint.publish(
                self.topic, pack_fragment(seq, idx, n, is_iframe, p.frag_bytes),
                stream_id=self.stream_id)
        self.frames_sent += 1
        self.frags_sent += n
        self._next_due += self.period_ns
        self.loop.call_at(self._next_due, self._emit, kind="frame-src")


class _PartialFrame:
    __slots__ = ("t_first_ns", "got", "n_frags", "is_iframe")

    def __init__(self, t_first_ns: int, n_frags: int, is_iframe: bool):
        self.t_first_ns = t_first_ns
        self.got = set()
        self.n_frags = n_frags
        self.is_iframe = is_iframe


class FrameSink:
    """Reassembles delivered fragments; one sink covers all frame streams."""

    def __init__(self, loop: EventLoop, bus: Bus,
                 trace_frame: Callable = None):
        self.loop = loop
        self.trace_frame = trace_frame
        self.partial: dict[tuple, _PartialFrame] = {}
        self.completed: dict[str, int] = {}
        self.lost: dict[str, int] = {}
        self.frags_rx: dict[str, int] = {}
        self._last_complete_ns: dict[str, int] = {}
        self._sub: Optional[Subscription] = None
        self._bus = bus

    def start(self):
        self._sub = self._bus.subscribe("net/gcs/frames")
        self._sub.set_waker(
            lambda: self.loop.call_soon(self._pump, kind="frame-sink"))

    def _pump(self):
        for env in self._sub.drain():
            sid = env.stream_id or env.topic
            try:
                seq, idx, n, iframe = unpack_fragment(env.payload)
            except struct.error as e:
                log.warning("bad fragment on %s: %s", env.topic, e)
                continue
            self.frags_rx[sid] = self.frags_rx.get(sid, 0) + 1
            key = (sid, seq)
            pf = self.partial.get(key)
            if pf is None:
                pf = _PartialFrame(self.loop.now_ns(), n, iframe)
                self.partial[key] = pf
            pf.got.add(idx)
            if len(pf.got) == pf.n_frags:
                self._complete(key, pf)

    def _complete(self, key: tuple, pf: _PartialFrame):
        sid, seq = key
        t = self.loop.now_ns()
        del self.partial[key]
        self.completed[sid] = self.completed.get(sid, 0) + 1
        prev = self._last_complete_ns.get(sid)
        gap_ms = (t - prev) / 1e6 if prev is not None else None
        self._last_complete_ns[sid] = t
        if self.trace_frame is not None:
            self.trace_frame(sid, seq, pf.is_iframe, pf.t_first_ns, t,
                             gap_ms, False)

    def finalize(self):
        for (sid, seq), pf in sorted(self.partial.items()):
            self.lost[sid] = self.lost.get(sid, 0) + 1
            if self.trace_frame is not None:
                self.trace_frame(sid, seq, pf.is_iframe, pf.t_first_ns, None,
                                 None, True)
        self.partial.clear()

    def stats(self, sources: dict) -> dict:
        """Combine sink counts with source counts for loss accounting."""
        out = {}
        for sid, src in sorted(sources.items()):
            comp = self.completed.get(sid, 0)
            sent = src.frames_sent
            out[sid] = {
                "frames_sent": sent,
                "frames_completed": comp,
                "frames_lost_partial": self.lost.get(sid, 0),
                "frags_sent": src.frags_sent,
                "frags_received": self.frags_rx.get(sid, 0),
                "loss_ratio": (1.0 - comp / sent) if sent else 0.0,
            }
        return out
