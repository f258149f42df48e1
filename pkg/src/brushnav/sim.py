"""Deterministic closed-loop simulator: board, agent, detector, guidance.

One Session owns a virtual board (paint mask), a reactive agent standing in
for the blindfolded painter, a noisy detector channel, and a guidance state
machine.  Each tick advances dt seconds: the agent moves along the last cue
direction it has heard (cues reach it after a reaction latency), paint is
deposited while the pen is down, the detector reports the tip, guidance may
emit a cue, and the tip is sampled on every sample-interval boundary.

Everything is driven by one seeded generator, so a config (seed included)
reproduces the identical session bit for bit.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Point2
from .grid import Cell, GridSpec, ReferenceArea, code_from_text, code_to_cell
from .guidance import Cue, GuidanceState, PromptPolicy, next_cue
from .metrics import (
    DegenerateTrajectory,
    FillMetrics,
    TimingStats,
    TrajectoryMetrics,
    fill_metrics,
    rect_pixel_window,
    relative_movement_distance,
    timing_stats,
)
from .tipdetect import DetectorChannel, DetectorNoiseModel

STATUS_COMPLETED = "completed"
STATUS_TIMEOUT = "timeout"

_DIRECTIONS = {
    "up": (0.0, -1.0),
    "down": (0.0, 1.0),
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
}


@dataclass(frozen=True)
class AgentModel:
    """Reactive painter model.

    Calibrated defaults: with the default detector and a 1 s prompt period,
    two-target sessions land in the 110-256 s completion envelope.
    """

    speed: float = 9.0                 # px/s along the cued axis
    heading_noise_sigma: float = 30.0  # degrees, per tick
    reaction_latency: float = 1.0      # s between cue emission and hearing
    fill_jitter: float = 4.0           # px, fill way-point scatter

    def __post_init__(self):
        if min(self.speed, self.heading_noise_sigma, self.reaction_latency, self.fill_jitter) < 0:
            raise ValueError("agent parameters must be nonnegative")


@dataclass(frozen=True)
class Sample:
    t: float
    point: Point2


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    targets: tuple[str, ...] = ("bc", "eg")
    policy: PromptPolicy = PromptPolicy(period=1.0)
    agent: AgentModel = AgentModel()
    detector: DetectorNoiseModel = DetectorNoiseModel(sigma=3.0, dropout_p=0.2, latency_ticks=1)
    grid: GridSpec = GridSpec()
    ref: ReferenceArea = ReferenceArea()
    dt: float = 0.1
    sample_interval: float = 0.3
    timeout: float = 600.0
    fill_completion: float = 0.8
    fill_overflow: float = 3.75
    brush_radius: int = 4
    start: Point2 | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not (self.dt <= self.sample_interval <= self.policy.period):
            raise ValueError("need dt <= sample_interval <= prompt period")
        ratio = self.sample_interval / self.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("sample_interval must be an integer multiple of dt")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not (0.0 < self.fill_completion <= 1.0):
            raise ValueError("fill_completion must be in (0, 1]")
        if self.brush_radius < 1:
            raise ValueError("brush radius must be >= 1")
        for code in self.targets:
            code_from_text(code, self.grid)  # raises CodeOutOfRange early

    @property
    def start_point(self) -> Point2:
        if self.start is not None:
            return self.start
        return Point2(self.grid.board_w / 2.0, self.grid.board_h / 2.0)


@dataclass(frozen=True)
class SimEvent:
    kind: str  # cue | sample | target_done | finished
    t: float
    info: tuple = ()


@dataclass(frozen=True)
class TargetResult:
    code: str
    t_start: float
    t_arrived: float | None
    t_done: float | None
    fill: FillMetrics | None
    trajectory: TrajectoryMetrics | None
    paint_runs: tuple[tuple[int, int, int], ...]  # (row, col_start, length)


@dataclass(frozen=True)
class SessionRecord:
    config: SessionConfig
    status: str
    duration: float
    samples: tuple[Sample, ...]
    cues: tuple[Cue, ...]
    targets: tuple[TargetResult, ...]
    partial: bool = False


def mask_to_runs(mask: np.ndarray) -> tuple[tuple[int, int, int], ...]:
    """Row-wise run-length encoding of a boolean mask: (row, start col, length)."""
    runs = []
    for r in range(mask.shape[0]):
        row = mask[r]
        if not row.any():
            continue
        padded = np.diff(np.concatenate(([0], row.view(np.int8), [0])))
        starts = np.nonzero(padded == 1)[0]
        stops = np.nonzero(padded == -1)[0]
        for s, e in zip(starts, stops):
            runs.append((r, int(s), int(e - s)))
    return tuple(runs)


def runs_to_mask(runs, shape: tuple[int, int]) -> np.ndarray:
    """Inverse of mask_to_runs."""
    mask = np.zeros(shape, dtype=bool)
    for r, c, n in runs:
        mask[r, c : c + n] = True
    return mask


class Session:
    """One running simulation; step() advances a single tick."""

    def __init__(self, config: SessionConfig):
        self.config = config
        grid = config.grid
        self.cells: list[Cell] = [
            code_to_cell(code_from_text(c, grid), grid) for c in config.targets
        ]
        # separate child streams: detector noise/dropout never perturbs the
        # agent's draws, so runs differing only in the detector stay coupled
        agent_seed, detector_seed = np.random.SeedSequence(config.seed).spawn(2)
        self.rng = np.random.default_rng(agent_seed)
        self.channel = DetectorChannel(config.detector, np.random.default_rng(detector_seed))
        self.mask = np.zeros(
            (int(round(grid.board_h)), int(round(grid.board_w))), dtype=bool
        )
        start = config.start_point
        self.x = float(start.x)
        self.y = float(start.y)
        self.ticks = 0
        self.sample_every = round(config.sample_interval / config.dt)
        self.hear_delay = (
            0
            if config.agent.reaction_latency == 0
            else max(1, round(config.agent.reaction_latency / config.dt))
        )
        self.samples: list[Sample] = [Sample(0.0, Point2(self.x, self.y))]
        self.cues: list[Cue] = []
        self.heading: tuple[float, float] | None = None
        self.pending: deque[tuple[int, str]] = deque()
        self.pen_down = False
        self.mode = "seek"
        self.finished = False
        self.status = STATUS_COMPLETED
        self.duration = 0.0
        self.results: list[TargetResult] = []
        self.target_idx = -1
        if self.cells:
            self._start_target(0, 0.0)
        else:
            self.finished = True

    # -- per-target bookkeeping ------------------------------------------

    def _start_target(self, idx: int, t: float) -> None:
        cfg = self.config
        self.target_idx = idx
        cell = self.cells[idx]
        self.gstate = GuidanceState(target=cell)
        self.mode = "seek"
        self.pen_down = False
        self.heading = None
        self.pending.clear()
        self._t_start = t
        self._t_arrived: float | None = None
        self._mask_before = self.mask.copy()
        self._window = rect_pixel_window(cell.rect, self.mask.shape)
        rs, cs = self._window
        target_area = (rs.stop - rs.start) * (cs.stop - cs.start)
        self._need = cfg.fill_completion * target_area
        self._painted_in_target = 0
        self._fill_path: list[tuple[float, float]] = []
        self._fill_i = 0

    def _finish_target(self, t: float, done: bool) -> None:
        cfg = self.config
        cell = self.cells[self.target_idx]
        delta = self.mask & ~self._mask_before
        fill = None
        if self.pen_down or delta.any():
            fill = fill_metrics(delta, cell, cfg.fill_completion, cfg.fill_overflow)
        window_end = self._t_arrived if self._t_arrived is not None else t
        seg = [s for s in self.samples if self._t_start <= s.t <= window_end]
        try:
            trajectory = relative_movement_distance(seg)
        except DegenerateTrajectory:
            trajectory = None
        self.results.append(
            TargetResult(
                code=cfg.targets[self.target_idx],
                t_start=self._t_start,
                t_arrived=self._t_arrived,
                t_done=t if done else None,
                fill=fill,
                trajectory=trajectory,
                paint_runs=mask_to_runs(delta),
            )
        )

    def _fill_waypoints(self, cell: Cell) -> list[tuple[float, float]]:
        # strokes span the whole cell: the painter cannot see the boundary,
        # so the brush radius and jitter spill over it naturally
        cfg = self.config
        x0, y0, x1, y1 = cell.rect
        r = float(cfg.brush_radius)
        jitter = cfg.agent.fill_jitter
        top, bottom = y0, y1
        n_rows = max(2, int(math.ceil((bottom - top) / (1.6 * r))) + 1)
        left, right = x0, x1
        points = []
        for i in range(n_rows):
            yy = top + (bottom - top) * i / (n_rows - 1)
            xs = (left, right) if i % 2 == 0 else (right, left)
            for xx in xs:
                if jitter > 0:
                    jx, jy = self.rng.normal(0.0, jitter, size=2)
                else:
                    jx, jy = 0.0, 0.0
                points.append((xx + float(jx), yy + float(jy)))
        return points

    # -- tick pieces ------------------------------------------------------

    def _hear_pending(self) -> None:
        while self.pending and self.pending[0][0] <= self.ticks:
            _, kind = self.pending.popleft()
            if kind == "arrived":
                self.mode = "fill"
                self.pen_down = True
                self.heading = None
                self._fill_path = self._fill_waypoints(self.cells[self.target_idx])
                self._fill_i = 0
            else:
                self.heading = _DIRECTIONS[kind]

    def _move(self) -> None:
        cfg = self.config
        step = cfg.agent.speed * cfg.dt
        if self.mode == "seek":
            if self.heading is None:
                return
            sigma = cfg.agent.heading_noise_sigma
            if sigma > 0:
                theta = math.atan2(self.heading[1], self.heading[0]) + math.radians(
                    float(self.rng.normal(0.0, sigma))
                )
                self.x += step * math.cos(theta)
                self.y += step * math.sin(theta)
            else:  # noiseless moves stay exactly on the cued axis
                self.x += step * self.heading[0]
                self.y += step * self.heading[1]
        else:  # fill: walk the serpentine way points
            if self._fill_i >= len(self._fill_path):
                self._fill_path = self._fill_waypoints(self.cells[self.target_idx])
                self._fill_i = 0
            tx, ty = self._fill_path[self._fill_i]
            dx, dy = tx - self.x, ty - self.y
            dist = math.hypot(dx, dy)
            if dist <= step:
                self.x, self.y = tx, ty
                self._fill_i += 1
            else:
                self.x += step * dx / dist
                self.y += step * dy / dist
        self.x = min(max(self.x, 0.0), cfg.grid.board_w)
        self.y = min(max(self.y, 0.0), cfg.grid.board_h)

    def _stamp(self) -> None:
        r = self.config.brush_radius
        h, w = self.mask.shape
        c0 = max(0, math.ceil(self.x - r))
        c1 = min(w - 1, math.floor(self.x + r))
        r0 = max(0, math.ceil(self.y - r))
        r1 = min(h - 1, math.floor(self.y + r))
        if c0 > c1 or r0 > r1:
            return
        dx = np.arange(c0, c1 + 1) - self.x
        dy = np.arange(r0, r1 + 1) - self.y
        disk = (dy[:, None] ** 2 + dx[None, :] ** 2) <= r * r
        sub = self.mask[r0 : r1 + 1, c0 : c1 + 1]
        new = disk & ~sub
        if not new.any():
            return
        sub |= disk
        rs, cs = self._window
        rr0, rr1 = max(r0, rs.start), min(r1 + 1, rs.stop)
        cc0, cc1 = max(c0, cs.start), min(c1 + 1, cs.stop)
        if rr0 < rr1 and cc0 < cc1:
            self._painted_in_target += int(
                new[rr0 - r0 : rr1 - r0, cc0 - c0 : cc1 - c0].sum()
            )

    # -- main loop --------------------------------------------------------

    def step(self) -> list[SimEvent]:
        """Advance one tick; returns the events it produced."""
        if self.finished:
            raise RuntimeError("session already finished")
        cfg = self.config
        self.ticks += 1
        t = self.ticks * cfg.dt
        events: list[SimEvent] = []

        self._hear_pending()
        self._move()
        if self.pen_down:
            self._stamp()

        detection = self.channel.sample(Point2(self.x, self.y), t)
        self.gstate, cue = next_cue(
            self.gstate,
            detection.point if detection is not None else None,
            t,
            cfg.policy,
            cfg.ref,
        )
        if cue is not None:
            self.cues.append(cue)
            events.append(SimEvent("cue", t, (cue.kind,)))
            self.pending.append((self.ticks + self.hear_delay, cue.kind))
            if cue.kind == "arrived":
                self._t_arrived = t

        if self.ticks % self.sample_every == 0:
            st = (self.ticks // self.sample_every) * cfg.sample_interval
            self.samples.append(Sample(st, Point2(self.x, self.y)))
            events.append(SimEvent("sample", t))

        if self.mode == "fill" and self._painted_in_target >= self._need:
            self._finish_target(t, done=True)
            events.append(SimEvent("target_done", t, (cfg.targets[self.target_idx],)))
            if self.target_idx + 1 < len(self.cells):
                self._start_target(self.target_idx + 1, t)
            else:
                self.finished = True
                self.status = STATUS_COMPLETED
                self.duration = t
                events.append(SimEvent("finished", t, (self.status,)))
                return events

        if t >= cfg.timeout:
            self._finish_target(t, done=False)
            self.finished = True
            self.status = STATUS_TIMEOUT
            self.duration = t
            events.append(SimEvent("finished", t, (self.status,)))
        return events

    def record(self) -> SessionRecord:
        if not self.finished:
            raise RuntimeError("session still running")
        return SessionRecord(
            config=self.config,
            status=self.status,
            duration=self.duration,
            samples=tuple(self.samples),
            cues=tuple(self.cues),
            targets=tuple(self.results),
        )


def run_session(config: SessionConfig) -> SessionRecord:
    """Run one full session to completion or timeout."""
    session = Session(config)
    while not session.finished:
        session.step()
    return session.record()


def derive_seed(base: int, index: int) -> int:
    """Per-run seed stream: stable derivation from a base seed and run index."""
    return int(np.random.SeedSequence((base, index)).generate_state(1, np.uint64)[0])


def run_batch(config: SessionConfig, runs: int) -> list[SessionRecord]:
    """Run ``runs`` sessions whose seeds derive from config.seed by index."""
    return [run_session(replace(config, seed=derive_seed(config.seed, i))) for i in range(runs)]


def total_seek_time(record: SessionRecord) -> float:
    """Total navigation time: per target, start to arrival (or to cutoff)."""
    total = 0.0
    for tr in record.targets:
        end = tr.t_arrived if tr.t_arrived is not None else (tr.t_done or record.duration)
        total += end - tr.t_start
    return total


@dataclass(frozen=True)
class SweepRow:
    label: str
    n_runs: int
    n_completed: int
    n_timeout: int
    timing: TimingStats | None  # over completed-session durations
    mean_completion: float | None
    mean_overflow: float | None
    mean_ratio: float | None
    class_shares: tuple[float, float, float] | None  # excellent, good, bad
    mean_seek_time: float | None


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...] = ()


def aggregate_records(label: str, records: list[SessionRecord]) -> SweepRow:
    completed = [r for r in records if r.status == STATUS_COMPLETED]
    fills = [t.fill for r in records for t in r.targets if t.fill is not None]
    trajs = [t.trajectory for r in records for t in r.targets if t.trajectory is not None]

    def _mean(vals):
        return sum(vals) / len(vals) if vals else None

    shares = None
    if trajs:
        n = len(trajs)
        shares = (
            sum(1 for t in trajs if t.rating == "excellent") / n,
            sum(1 for t in trajs if t.rating == "good") / n,
            sum(1 for t in trajs if t.rating == "bad") / n,
        )
    return SweepRow(
        label=label,
        n_runs=len(records),
        n_completed=len(completed),
        n_timeout=sum(1 for r in records if r.status == STATUS_TIMEOUT),
        timing=timing_stats([r.duration for r in completed]) if completed else None,
        mean_completion=_mean([f.completion for f in fills]),
        mean_overflow=_mean([f.overflow for f in fills]),
        mean_ratio=_mean([t.ratio for t in trajs]),
        class_shares=shares,
        mean_seek_time=_mean([total_seek_time(r) for r in records]),
    )


def sweep(configs: list[SessionConfig], runs: int = 1) -> SweepReport:
    """Batch-run each config ``runs`` times and aggregate per config."""
    rows = []
    for cfg in configs:
        label = f"period={cfg.policy.period}s targets={','.join(cfg.targets)} dropout={cfg.detector.dropout_p}"
        rows.append(aggregate_records(label, run_batch(cfg, runs)))
    return SweepReport(rows=tuple(rows))
