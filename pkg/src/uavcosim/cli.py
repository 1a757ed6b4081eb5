"""Command line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

from .bench import MODES, bench_bus
from .bus import CapacityError, DEFAULT_PAIR_CAPACITY
from .scenario import (ConfigError, StallFault, load_config, preset_names,
                       run_scenario, scale_scenario)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load(source: str):
    if source.startswith("scale:"):
        return scale_scenario(int(source.split(":", 1)[1]))
    return load_config(source)


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg.sim.seed = args.seed
    if getattr(args, "duration", None) is not None:
        cfg.sim.duration_s = args.duration
    if getattr(args, "contenders", None) is not None:
        n = args.contenders
        if cfg.interferers:
            for entry in cfg.interferers:
                entry.count = n
        elif n > 0:
            from .scenario.config import InterfererCfg
            cfg.interferers.append(InterfererCfg(count=n))
    return cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_load(args.scenario), args)
    result = run_scenario(cfg, out_dir=args.out,
                          realtime=not args.logical_time,
                          stall=StallFault(args.stall_at, args.stall_ms)
                          if args.stall_at is not None else None)
    rep = result.report
    print(f"scenario {rep['scenario']}: {rep['duration_s']}s "
          f"({'realtime' if rep['realtime'] else 'logical'}), "
          f"{rep['n_freeze_events']} freeze events, "
          f"wallclock {rep['wallclock_s']}s")
    for sid, st in rep["streams"].items():
        mean = st["delay_ms_mean"]
        tail = f" mean {mean:.3f} ms" if mean is not None else ""
        print(f"  {sid}: sent {st['sent']} delivered {st['delivered']} "
              f"dropped {st['dropped_total']}{tail}")
    if rep.get("loop_errors"):
        print(f"warning: {rep['loop_errors']} event errors", file=sys.stderr)
        return EXIT_RUNTIME
    if args.out:
        print(f"artifacts in {args.out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args.scenario)
    n_streams = len(cfg.streams)
    print(f"ok: {cfg.name}: {len(cfg.uavs)} uavs, {n_streams} streams, "
          f"{sum(i.count for i in cfg.interferers)} interferers, "
          f"duration {cfg.sim.duration_s}s, sync {cfg.sim.sync_mode}")
    return EXIT_OK


def _cmd_case_study(args) -> int:
    return _cmd_run(args)


def _cmd_bench_bus(args) -> int:
    summary = bench_bus(args.streams, args.payload, args.mode, args.duration,
                        rate_hz=args.rate, max_pairs=args.max_pairs)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stream_id", "seq", "d_pub_ns", "d_q_ns", "d_sub_ns",
                        "d_ze2e_ns"])
            for s in summary.samples:
                w.writerow([s.stream_id, s.seq, s.d_pub_ns, s.d_q_ns,
                            s.d_sub_ns, s.d_ze2e_ns])
    print(f"mode {summary.mode}: {summary.n_streams} streams x "
          f"{summary.rate_hz:.0f} Hz, {summary.payload_bytes} B payload, "
          f"{summary.duration_s}s")
    print(f"  sent {summary.n_sent} received {summary.n_received} "
          f"dropped {summary.n_dropped}")
    if summary.n_received:
        print(f"  ze2e mean {summary.mean_ze2e_ns / 1e6:.3f} ms "
              f"p50 {summary.p50_ze2e_ns / 1e6:.3f} "
              f"p99 {summary.p99_ze2e_ns / 1e6:.3f} "
              f"max {summary.max_ze2e_ns / 1e6:.3f}")
        print(f"  legs mean: pub {summary.mean_pub_ns / 1e3:.1f} us, "
              f"queue {summary.mean_q_ns / 1e3:.1f} us, "
              f"sub {summary.mean_sub_ns / 1e3:.1f} us")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .gcs.gateway import serve_scenario
    cfg = _apply_overrides(_load(args.scenario), args)
    serve_scenario(cfg, ws_port=args.ws_port, out_dir=args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uavcosim",
        description="co-simulated vehicle fleet over a simulated network")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_run_args(p, with_stall=False):
        p.add_argument("scenario",
                       help="preset name (%s), scale:<n>, or a JSON file"
                       % ", ".join(preset_names()))
        p.add_argument("--out", help="artifact directory (traces, report, figures)")
        p.add_argument("--logical-time", action="store_true",
                       help="run on virtual time instead of the wall clock")
        p.add_argument("--seed", type=int)
        p.add_argument("--duration", type=float, help="override duration_s")
        if with_stall:
            p.add_argument("--stall-at", type=float, default=None,
                           help="inject a loop stall at this second")
            p.add_argument("--stall-ms", type=float, default=100.0)

    p_run = sub.add_parser("run", help="run a scenario")
    add_run_args(p_run, with_stall=True)
    p_run.add_argument("--contenders", type=int, default=None,
                       help="override interferer count")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="parse and check a scenario")
    p_val.add_argument("scenario")
    p_val.set_defaults(fn=_cmd_validate)

    p_cs = sub.add_parser("case-study", help="run a shipped case study")
    p_cs.add_argument("scenario", choices=("cs1", "cs2", "cs3", "cs4"))
    p_cs.add_argument("--contenders", type=int, default=None,
                      help="override interferer count")
    p_cs.add_argument("--out")
    p_cs.add_argument("--logical-time", action="store_true")
    p_cs.add_argument("--seed", type=int)
    p_cs.add_argument("--duration", type=float)
    p_cs.set_defaults(fn=_cmd_case_study, stall_at=None, stall_ms=0.0)

    p_bb = sub.add_parser("bench-bus", help="benchmark the message bus")
    p_bb.add_argument("--streams", type=int, required=True)
    p_bb.add_argument("--payload", type=int, required=True)
    p_bb.add_argument("--mode", choices=MODES, required=True)
    p_bb.add_argument("--duration", type=float, required=True)
    p_bb.add_argument("--rate", type=float, default=100.0)
    p_bb.add_argument("--max-pairs", type=int, default=DEFAULT_PAIR_CAPACITY)
    p_bb.add_argument("--out", help="per-sample CSV path")
    p_bb.set_defaults(fn=_cmd_bench_bus)

    p_srv = sub.add_parser("serve", help="run with the web gateway attached")
    add_run_args(p_srv)
    p_srv.add_argument("--ws-port", type=int, default=8765)
    p_srv.add_argument("--contenders", type=int, default=None)
    p_srv.set_defaults(fn=_cmd_serve)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, CapacityError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - surface anything else as runtime
        log.exception("run failed")
        print(f"runtime failure: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
