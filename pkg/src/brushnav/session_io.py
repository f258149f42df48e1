"""Session persistence and replay: the bnav/1 line-delimited frame schema.

A record file and the live wire protocol share one schema: UTF-8 lines,
each a JSON object with a ``type`` field.  Files start with a ``hello``
header frame carrying the protocol version, the config snapshot and the
session outcome, followed by per-target blocks::

    command -> tip* -> cue/arrived* -> paint* -> summary

Paint frames hold per-row run-length encodings of the pixels newly painted
during that target, so fill metrics replay exactly and the full mask is the
union of all targets' runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .geometry import Point2
from .grid import GridSpec, ReferenceArea, code_from_text, code_to_cell
from .guidance import Cue, PromptPolicy
from .metrics import (
    DegenerateTrajectory,
    FillMetrics,
    TrajectoryMetrics,
    fill_metrics,
    relative_movement_distance,
)
from .sim import Sample, SessionConfig, SessionRecord, TargetResult, runs_to_mask
from .tipdetect import DetectorNoiseModel

PROTO = "bnav/1"


class SessionIoError(Exception):
    pass


class IoFailure(SessionIoError):
    pass


class SchemaMismatch(SessionIoError):
    pass


class CorruptRecord(SessionIoError):
    pass


# -- config <-> flat dict / key=value text ---------------------------------

_CONFIG_CASTS = {
    "seed": int,
    "targets": str,
    "period": float,
    "speed": float,
    "heading_noise_sigma": float,
    "reaction_latency": float,
    "fill_jitter": float,
    "sigma": float,
    "dropout_p": float,
    "latency_ticks": int,
    "rows": int,
    "cols": int,
    "board_w": float,
    "board_h": float,
    "ref_a_frac": float,
    "ref_b_frac": float,
    "dt": float,
    "sample_interval": float,
    "timeout": float,
    "fill_completion": float,
    "fill_overflow": float,
    "brush_radius": int,
    "start_x": float,
    "start_y": float,
}


def config_to_dict(config: SessionConfig) -> dict:
    """Flatten a SessionConfig into primitive key/value pairs."""
    d = {
        "seed": config.seed,
        "targets": ",".join(config.targets),
        "period": config.policy.period,
        "speed": config.agent.speed,
        "heading_noise_sigma": config.agent.heading_noise_sigma,
        "reaction_latency": config.agent.reaction_latency,
        "fill_jitter": config.agent.fill_jitter,
        "sigma": config.detector.sigma,
        "dropout_p": config.detector.dropout_p,
        "latency_ticks": config.detector.latency_ticks,
        "rows": config.grid.rows,
        "cols": config.grid.cols,
        "board_w": config.grid.board_w,
        "board_h": config.grid.board_h,
        "ref_a_frac": config.ref.a_frac,
        "ref_b_frac": config.ref.b_frac,
        "dt": config.dt,
        "sample_interval": config.sample_interval,
        "timeout": config.timeout,
        "fill_completion": config.fill_completion,
        "fill_overflow": config.fill_overflow,
        "brush_radius": config.brush_radius,
    }
    if config.start is not None:
        d["start_x"] = config.start.x
        d["start_y"] = config.start.y
    return d


def config_from_dict(d: dict) -> SessionConfig:
    """Rebuild a SessionConfig from a flat dict (string values are cast)."""
    vals = {}
    for key, raw in d.items():
        if key not in _CONFIG_CASTS:
            raise SchemaMismatch(f"unknown config key {key!r}")
        vals[key] = _CONFIG_CASTS[key](raw)
    kwargs = {}
    if "seed" in vals:
        kwargs["seed"] = vals["seed"]
    if "targets" in vals:
        kwargs["targets"] = tuple(c for c in vals["targets"].split(",") if c)
    if "period" in vals:
        kwargs["policy"] = PromptPolicy(period=vals["period"])
    agent_keys = ("speed", "heading_noise_sigma", "reaction_latency", "fill_jitter")
    if any(k in vals for k in agent_keys):
        from .sim import AgentModel

        defaults = AgentModel()
        kwargs["agent"] = AgentModel(*(vals.get(k, getattr(defaults, k)) for k in agent_keys))
    det_keys = ("sigma", "dropout_p", "latency_ticks")
    if any(k in vals for k in det_keys):
        default_det = SessionConfig.__dataclass_fields__["detector"].default
        kwargs["detector"] = DetectorNoiseModel(
            *(vals.get(k, getattr(default_det, k)) for k in det_keys)
        )
    grid_keys = ("rows", "cols", "board_w", "board_h")
    if any(k in vals for k in grid_keys):
        defaults_grid = GridSpec()
        kwargs["grid"] = GridSpec(*(vals.get(k, getattr(defaults_grid, k)) for k in grid_keys))
    if "ref_a_frac" in vals or "ref_b_frac" in vals:
        kwargs["ref"] = ReferenceArea(vals.get("ref_a_frac", 0.5), vals.get("ref_b_frac", 0.5))
    for key in ("dt", "sample_interval", "timeout", "fill_completion", "fill_overflow", "brush_radius"):
        if key in vals:
            kwargs[key] = vals[key]
    if "start_x" in vals and "start_y" in vals:
        kwargs["start"] = Point2(vals["start_x"], vals["start_y"])
    return SessionConfig(**kwargs)


def parse_config_text(text: str) -> SessionConfig:
    """Parse the flat ``key=value`` config format (blank/# lines ignored)."""
    d = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        d[key.strip()] = value.strip()
    return config_from_dict(d)


def load_config(path) -> SessionConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def format_config(config: SessionConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in config_to_dict(config).items())


# -- record -> frames -------------------------------------------------------

def encode_frame(frame: dict) -> str:
    return json.dumps(frame, separators=(",", ":"))


def _summary_frame(tr: TargetResult) -> dict:
    frame: dict = {
        "type": "summary",
        "code": tr.code,
        "t_start": tr.t_start,
        "t_arrived": tr.t_arrived,
        "t_done": tr.t_done,
        "duration": None if tr.t_done is None else tr.t_done - tr.t_start,
    }
    if tr.fill is not None:
        frame.update(
            s_t=tr.fill.target_area,
            s_c=tr.fill.painted_area,
            s_r=tr.fill.painted_in_target,
            o_c=tr.fill.completion,
            o_d=tr.fill.overflow,
            completed=tr.fill.completed,
        )
    if tr.trajectory is not None:
        frame.update(
            l_m=tr.trajectory.path_length,
            l_i=tr.trajectory.ideal_length,
            r=tr.trajectory.ratio,
            **{"class": tr.trajectory.rating},
        )
    return frame


def paint_frames(paint_runs) -> list[dict]:
    """Group (row, start, length) runs into one paint frame per row."""
    by_row: dict[int, list[list[int]]] = {}
    for row, start, length in paint_runs:
        by_row.setdefault(row, []).append([start, length])
    return [{"type": "paint", "row": row, "runs": runs} for row, runs in sorted(by_row.items())]


def record_to_frames(record: SessionRecord) -> list[dict]:
    frames: list[dict] = [
        {
            "type": "hello",
            "proto": PROTO,
            "config": config_to_dict(record.config),
            "status": record.status,
            "duration": record.duration,
        }
    ]
    bounds = [tr.t_start for tr in record.targets] + [math.inf]
    for k, tr in enumerate(record.targets):
        frames.append({"type": "command", "code": tr.code, "t": tr.t_start})
        lo, hi = bounds[k], bounds[k + 1]
        for s in record.samples:
            if lo <= s.t < hi or (k == 0 and s.t < lo):
                frames.append({"type": "tip", "t": s.t, "x": s.point.x, "y": s.point.y})
        for cue in record.cues:
            if lo <= cue.t < hi:
                if cue.kind == "arrived":
                    frames.append({"type": "arrived", "t": cue.t, "code": tr.code})
                else:
                    frames.append({"type": "cue", "kind": cue.kind, "t": cue.t})
        frames.extend(paint_frames(tr.paint_runs))
        frames.append(_summary_frame(tr))
    return frames


def _fill_from_summary(frame: dict) -> FillMetrics | None:
    if "o_c" not in frame:
        return None
    return FillMetrics(
        target_area=frame["s_t"],
        painted_area=frame["s_c"],
        painted_in_target=frame["s_r"],
        completion=frame["o_c"],
        overflow=frame["o_d"],
        completed=frame["completed"],
    )


def _trajectory_from_summary(frame: dict) -> TrajectoryMetrics | None:
    if "r" not in frame or frame["r"] is None:
        return None
    return TrajectoryMetrics(
        path_length=frame["l_m"],
        ideal_length=frame["l_i"],
        ratio=frame["r"],
        rating=frame["class"],
    )


def record_from_frames(frames: list[dict], partial: bool = False) -> SessionRecord:
    if not frames:
        raise SchemaMismatch("no frames")
    hello = frames[0]
    if hello.get("type") != "hello":
        raise SchemaMismatch("first frame must be hello")
    if hello.get("proto") != PROTO:
        raise SchemaMismatch(f"unsupported schema version {hello.get('proto')!r}")
    config = config_from_dict(hello.get("config", {}))
    samples: list[Sample] = []
    cues: list[Cue] = []
    targets: list[TargetResult] = []
    block: dict | None = None

    def close_block(summary: dict | None):
        nonlocal block
        if block is None:
            return
        if summary is None:
            # truncated mid-block: keep what is known
            targets.append(
                TargetResult(
                    code=block["code"],
                    t_start=block["t_start"],
                    t_arrived=block["t_arrived"],
                    t_done=None,
                    fill=None,
                    trajectory=None,
                    paint_runs=tuple(block["runs"]),
                )
            )
        else:
            targets.append(
                TargetResult(
                    code=summary["code"],
                    t_start=summary["t_start"],
                    t_arrived=summary["t_arrived"],
                    t_done=summary["t_done"],
                    fill=_fill_from_summary(summary),
                    trajectory=_trajectory_from_summary(summary),
                    paint_runs=tuple(block["runs"]),
                )
            )
        block = None

    for frame in frames[1:]:
        ftype = frame.get("type")
        if ftype == "command":
            close_block(None)
            block = {"code": frame["code"], "t_start": frame.get("t", 0.0), "t_arrived": None, "runs": []}
        elif ftype == "tip":
            samples.append(Sample(frame["t"], Point2(frame["x"], frame["y"])))
        elif ftype == "cue":
            cues.append(Cue(frame["kind"], frame["t"]))
        elif ftype == "arrived":
            cues.append(Cue("arrived", frame["t"]))
            if block is not None:
                block["t_arrived"] = frame["t"]
        elif ftype == "paint":
            if block is not None:
                for start, length in frame["runs"]:
                    block["runs"].append((frame["row"], start, length))
        elif ftype == "summary":
            close_block(frame)
        else:
            raise SchemaMismatch(f"unknown frame type {ftype!r}")
    if block is not None:
        partial = True
        close_block(None)
    return SessionRecord(
        config=config,
        status=hello.get("status", "completed"),
        duration=hello.get("duration", 0.0),
        samples=tuple(samples),
        cues=tuple(cues),
        targets=tuple(targets),
        partial=partial,
    )


def dumps_record(record: SessionRecord) -> str:
    return "".join(encode_frame(f) + "\n" for f in record_to_frames(record))


def loads_record(text: str) -> SessionRecord:
    frames = []
    partial = False
    for line in text.split("\n"):
        if not line.strip():
            continue
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            partial = True
            break
        if not isinstance(frame, dict) or "type" not in frame:
            partial = True
            break
        frames.append(frame)
    return record_from_frames(frames, partial=partial)


def save_record(record: SessionRecord, path) -> None:
    """Write a record file; load_record(save_record(r)) round-trips exactly."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps_record(record))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_record(path) -> SessionRecord:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return loads_record(text)


# -- replay -----------------------------------------------------------------

@dataclass(frozen=True)
class ReplayReport:
    """Recomputed per-target metrics plus any degeneracy notes."""

    targets: tuple[tuple[FillMetrics | None, TrajectoryMetrics | None], ...]
    notes: tuple[str, ...] = ()


def replay(record: SessionRecord) -> ReplayReport:
    """Recompute metrics from the stored samples and paint runs.

    The recomputed values must equal the stored ones exactly; any deviation
    raises CorruptRecord.
    """
    cfg = record.config
    for a, b in zip(record.samples, record.samples[1:]):
        if b.t <= a.t:
            raise CorruptRecord("sample timestamps are not strictly increasing")
    shape = (int(round(cfg.grid.board_h)), int(round(cfg.grid.board_w)))
    entries = []
    notes = []
    for tr in record.targets:
        cell = code_to_cell(code_from_text(tr.code, cfg.grid), cfg.grid)
        delta = runs_to_mask(tr.paint_runs, shape)
        fill = None
        if tr.fill is not None or delta.any():
            fill = fill_metrics(delta, cell, cfg.fill_completion, cfg.fill_overflow)
        if fill != tr.fill:
            raise CorruptRecord(f"target {tr.code}: stored fill metrics do not replay")
        end = tr.t_arrived
        if end is None:
            end = tr.t_done if tr.t_done is not None else record.duration
        seg = [s for s in record.samples if tr.t_start <= s.t <= end]
        try:
            trajectory = relative_movement_distance(seg)
        except DegenerateTrajectory:
            trajectory = None
            notes.append(f"target {tr.code}: degenerate trajectory")
        if trajectory != tr.trajectory:
            raise CorruptRecord(f"target {tr.code}: stored trajectory metrics do not replay")
        entries.append((fill, trajectory))
    return ReplayReport(targets=tuple(entries), notes=tuple(notes))
