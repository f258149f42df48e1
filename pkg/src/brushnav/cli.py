"""Command-line surface: run, sweep, replay, metrics, heatmap, serve."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .guidance import PromptPolicy
from .metrics import SESSION_CSV_HEADER, heatmap, heatmap_to_csv, heatmap_to_pgm, session_csv_line
from .session_io import (
    CorruptRecord,
    config_from_dict,
    dumps_record,
    load_config,
    load_record,
    replay,
    save_record,
)
from .sim import SessionConfig, run_session, sweep
from .server import serve


def _base_config(args) -> SessionConfig:
    config = load_config(args.config) if getattr(args, "config", None) else SessionConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "targets", None):
        overrides["targets"] = tuple(args.targets.split(","))
    if getattr(args, "period", None) is not None:
        overrides["policy"] = PromptPolicy(period=args.period)
    return replace(config, **overrides) if overrides else config


def _print_summary(record):
    print(f"status={record.status} duration={record.duration:.1f}s "
          f"samples={len(record.samples)} cues={len(record.cues)}")
    for tr in record.targets:
        bits = [f"target {tr.code}:"]
        if tr.t_arrived is not None:
            bits.append(f"arrived at {tr.t_arrived:.1f}s")
        if tr.fill is not None:
            bits.append(f"completion={tr.fill.completion:.3f} overflow={tr.fill.overflow:.3f}")
        if tr.trajectory is not None:
            bits.append(f"R={tr.trajectory.ratio:.2f} ({tr.trajectory.rating})")
        print("  " + " ".join(bits))


def _cmd_run(args) -> int:
    record = run_session(_base_config(args))
    if args.out:
        save_record(record, args.out)
        print(f"record written to {args.out}")
    _print_summary(record)
    if args.csv:
        print(SESSION_CSV_HEADER)
        print(session_csv_line(record))
    return 0


def _cmd_sweep(args) -> int:
    base = _base_config(args)
    configs = []
    for period in [float(p) for p in args.periods.split(",")]:
        cfg = replace(base, policy=PromptPolicy(period=period))
        for targets in args.target_set or [None]:
            cfg2 = cfg if targets is None else replace(cfg, targets=tuple(targets.split(",")))
            for dropout in [float(d) for d in args.dropouts.split(",")] if args.dropouts else [None]:
                configs.append(
                    cfg2
                    if dropout is None
                    else replace(cfg2, detector=replace(cfg2.detector, dropout_p=dropout))
                )
    report = sweep(configs, runs=args.runs)
    for row in report.rows:
        timing = row.timing
        stats = (
            f"mean={timing.mean:.1f}s min={timing.min:.1f}s max={timing.max:.1f}s std={timing.std:.1f}s"
            if timing
            else "no completed runs"
        )
        print(f"{row.label}: {row.n_completed}/{row.n_runs} completed, {stats}")
    return 0


def _cmd_replay(args) -> int:
    record = load_record(args.record)
    if record.partial:
        print("warning: record is partial (truncated file)", file=sys.stderr)
    try:
        report = replay(record)
    except CorruptRecord as exc:
        print(f"CORRUPT: {exc}", file=sys.stderr)
        return 1
    print(f"replay ok: {len(report.targets)} target(s) verified")
    for note in report.notes:
        print(f"  note: {note}")
    if args.rerun:
        fresh = run_session(record.config)
        if dumps_record(fresh) == dumps_record(replace(record, partial=False)):
            print("rerun ok: record reproduces bit-exactly")
        else:
            print("RERUN MISMATCH: simulation does not reproduce this record", file=sys.stderr)
            return 1
    return 0


def _cmd_metrics(args) -> int:
    print(SESSION_CSV_HEADER)
    for path in args.records:
        print(session_csv_line(load_record(path)))
    return 0


def _cmd_heatmap(args) -> int:
    record = load_record(args.record)
    hm = heatmap(record.samples, (record.config.grid.board_w, record.config.grid.board_h))
    text = heatmap_to_pgm(hm) if args.out.endswith(".pgm") else heatmap_to_csv(hm)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"heatmap written to {args.out} ({hm.total} samples)")
    return 0


def _cmd_serve(args) -> int:
    config = load_config(args.config) if args.config else SessionConfig()
    server = serve(config, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(f"serving bnav/1 on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brushnav",
        description="Painting-navigation engine: simulate, serve, replay, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulated session")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--targets", help="comma-separated cell codes, e.g. bc,eg")
    p.add_argument("--period", type=float, help="prompt period in seconds")
    p.add_argument("--out", help="record file to write")
    p.add_argument("--csv", action="store_true", help="also print the CSV metrics line")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="batch sessions over prompt periods / target sets")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--periods", default="1,2,3", help="comma-separated prompt periods")
    p.add_argument("--target-set", action="append", help="target list (repeatable), e.g. bc,eg")
    p.add_argument("--dropouts", help="comma-separated detector dropout levels")
    p.add_argument("--runs", type=int, default=20, help="sessions per configuration")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("replay", help="verify a record's stored metrics")
    p.add_argument("record")
    p.add_argument("--rerun", action="store_true", help="also re-simulate and compare bytes")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("metrics", help="print one CSV line per record")
    p.add_argument("records", nargs="+")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("heatmap", help="export a record's occupancy heatmap")
    p.add_argument("record")
    p.add_argument("--out", required=True, help="output path (.csv or .pgm)")
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("serve", help="run the live guidance service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7733)
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
