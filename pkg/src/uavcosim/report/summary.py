"""End-of-run report assembly."""

from __future__ import annotations

import json
import os
import resource
import sys


def peak_rss_kb() -> int:
    """High-water resident set of this process in kB."""
    ru = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # ru_maxrss is kB on Linux, bytes on macOS
    return ru // 1024 if sys.platform == "darwin" else ru


def build_report(scenario_name: str, seed: int, duration_s: float,
                 sync_mode: str, realtime: bool, streams: dict,
                 freeze_events: list, uavs: dict, frames: dict = None,
                 extra: dict = None) -> dict:
    rep = {
        "scenario": scenario_name,
        "seed": seed,
        "duration_s": duration_s,
        "sync_mode": sync_mode,
        "realtime": realtime,
        "streams": streams,
        "freeze_events": freeze_events,
        "n_freeze_events": len(freeze_events),
        "uavs": uavs,
        "resources": {"peak_rss_kb": peak_rss_kb()},
    }
    if frames:
        rep["frames"] = frames
    if extra:
        rep.update(extra)
    return rep


def write_report(report: dict, out_dir: str) -> str:
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
