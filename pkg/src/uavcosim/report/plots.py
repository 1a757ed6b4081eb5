"""Figures rendered next to the trace files after a run."""

from __future__ import annotations

import logging
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .traces import TraceRecorder

log = logging.getLogger(__name__)


def render_figures(rec: TraceRecorder, out_dir: str,
                   freeze_events: list = None) -> list:
    """Render the standard figure set; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, fn in (("delay_timeline.png", _delay_timeline),
                     ("delay_by_stream.png", _delay_by_stream),
                     ("rss_timeline.png", _rss_timeline),
                     ("frame_intervals.png", _frame_intervals)):
        path = os.path.join(out_dir, name)
        try:
            fig = fn(rec, freeze_events or [])
        except Exception:
            log.exception("figure %s failed", name)
            continue
        if fig is None:
            continue
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written


def _by_stream(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[r[0]].append(r)
    return groups


def _delay_timeline(rec: TraceRecorder, freeze_events: list):
    rows = [r for r in rec.delay.rows if not r[7]]
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(9, 4))
    for sid, rs in sorted(_by_stream(rows).items()):
        t = [r[2] / 1e9 for r in rs]
        d = [r[3] / 1e6 for r in rs]
        ax.plot(t, d, ".", markersize=2.5, label=sid)
    for ev in freeze_events:
        t0 = ev["t_ns"] / 1e9
        ax.axvspan(t0, t0 + ev["duration_ns"] / 1e9, color="red", alpha=0.15)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("network delay (ms)")
    ax.set_title("Per-packet network delay")
    ax.legend(loc="upper right", fontsize=7, markerscale=3)
    fig.tight_layout()
    return fig


def _delay_by_stream(rec: TraceRecorder, _freeze):
    rows = [r for r in rec.delay.rows if not r[7]]
    if not rows:
        return None
    groups = _by_stream(rows)
    sids = sorted(groups)
    means = [sum(r[3] for r in groups[s]) / len(groups[s]) / 1e6 for s in sids]
    p99s = []
    for s in sids:
        d = sorted(r[3] for r in groups[s])
        p99s.append(d[min(len(d) - 1, int(0.99 * (len(d) - 1) + 0.5))] / 1e6)
    fig, ax = plt.subplots(figsize=(7, 4))
    x = range(len(sids))
    ax.bar([i - 0.2 for i in x], means, width=0.4, label="mean")
    ax.bar([i + 0.2 for i in x], p99s, width=0.4, label="p99")
    ax.set_xticks(list(x))
    ax.set_xticklabels(sids, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("delay (ms)")
    ax.set_title("Delay by stream")
    ax.legend()
    fig.tight_layout()
    return fig


def _rss_timeline(rec: TraceRecorder, _freeze):
    if not rec.rss.rows:
        return None
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    groups = defaultdict(list)
    for r in rec.rss.rows:
        groups[(r[1], r[2])].append(r)
    for (node, peer), rs in sorted(groups.items()):
        t = [r[0] / 1e9 for r in rs]
        v = [float(r[3]) for r in rs]
        ax1.plot(t, v, label=f"{node}->{peer}", linewidth=1)
        ax2.plot([float(r[4]) for r in rs], [float(r[5]) for r in rs],
                 linewidth=1, label=node)
    ax1.set_xlabel("time (s)")
    ax1.set_ylabel("RSS (dBm)")
    ax1.set_title("Received power")
    ax1.legend(fontsize=7)
    ax2.set_xlabel("x (m)")
    ax2.set_ylabel("y (m)")
    ax2.set_title("Ground track")
    ax2.axis("equal")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _frame_intervals(rec: TraceRecorder, _freeze):
    rows = rec.frames.rows
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(9, 4))
    for sid in sorted({r[0] for r in rows}):
        rs = [r for r in rows if r[0] == sid and r[5] != "" and not r[6]]
        if rs:
            ax.plot([r[1] for r in rs], [float(r[5]) for r in rs],
                    ".", markersize=3, label=sid)
        lost = [r for r in rows if r[0] == sid and r[6]]
        if lost:
            ax.plot([r[1] for r in lost], [0] * len(lost), "x", color="red",
                    markersize=4, label=f"{sid} lost")
    ax.set_xlabel("frame")
    ax.set_ylabel("inter-frame gap (ms)")
    ax.set_title("Video frame pacing")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig
