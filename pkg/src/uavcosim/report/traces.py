"""Delimited trace files written incrementally during a run.

Three traces, one row per observation:

    delay_trace.csv  stream_id,seq,t0_ns,delta_ns,release_ns,lateness_ns,hops,dropped,reason
    rss_trace.csv    t_ns,node_id,peer_id,rss_dbm,x_m,y_m,z_m
    frame_trace.csv  stream,frame_seq,is_iframe,t_first_frag_ns,t_complete_ns,interframe_ms,lost

Rows go to disk as they happen so memory stays flat on long runs; a bounded
copy is kept in memory for the figures.
"""

from __future__ import annotations

import csv
import os
from typing import Optional

MAX_ROWS_IN_MEMORY = 300_000

DELAY_HEADER = ["stream_id", "seq", "t0_ns", "delta_ns", "release_ns",
                "lateness_ns", "hops", "dropped", "reason"]
RSS_HEADER = ["t_ns", "node_id", "peer_id", "rss_dbm", "x_m", "y_m", "z_m"]
FRAME_HEADER = ["stream", "frame_seq", "is_iframe", "t_first_frag_ns",
                "t_complete_ns", "interframe_ms", "lost"]


def percentile(values: list, q: float) -> Optional[float]:
    if not values:
        return None
    s = sorted(values)
    idx = min(len(s) - 1, int(q * (len(s) - 1) + 0.5))
    return s[idx]


class _Sink:
    def __init__(self, path: Optional[str], header: list):
        self.rows: list = []
        self._fh = None
        self._writer = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._writer = csv.writer(self._fh)
            self._writer.writerow(header)

    def add(self, row: list):
        if self._writer is not None:
            self._writer.writerow(row)
        if len(self.rows) < MAX_ROWS_IN_MEMORY:
            self.rows.append(row)

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class TraceRecorder:
    def __init__(self, out_dir: Optional[str] = None):
        self.out_dir = out_dir
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
        p = (lambda n: os.path.join(out_dir, n)) if out_dir else (lambda n: None)
        self.delay = _Sink(p("delay_trace.csv"), DELAY_HEADER)
        self.rss = _Sink(p("rss_trace.csv"), RSS_HEADER)
        self.frames = _Sink(p("frame_trace.csv"), FRAME_HEADER)

    def delay_row(self, stream_id: str, seq: int, t0_ns: int, delta_ns: int,
                  release_ns: int, lateness_ns: int, hops: list,
                  dropped: bool, reason: str):
        self.delay.add([stream_id, seq, t0_ns, delta_ns, release_ns,
                        lateness_ns, "|".join(str(h) for h in hops),
                        1 if dropped else 0, reason])

    def rss_row(self, t_ns: int, node_id: str, peer_id: str, rss_dbm: float,
                pos):
        self.rss.add([t_ns, node_id, peer_id, f"{rss_dbm:.4f}",
                      f"{pos.x:.3f}", f"{pos.y:.3f}", f"{pos.z:.3f}"])

    def frame_row(self, stream: str, frame_seq: int, is_iframe: bool,
                  t_first_frag_ns: int, t_complete_ns: Optional[int],
                  interframe_ms: Optional[float], lost: bool):
        self.frames.add([stream, frame_seq, 1 if is_iframe else 0,
                         t_first_frag_ns,
                         t_complete_ns if t_complete_ns is not None else "",
                         f"{interframe_ms:.3f}" if interframe_ms is not None else "",
                         1 if lost else 0])

    def close(self):
        self.delay.close()
        self.rss.close()
        self.frames.close()
