"""Objective evaluation suite: trajectory efficiency, fill quality, heatmaps.

Definitions:
  * relative movement distance  R = path length / straight start-to-end
    distance (>= 1; smaller is more efficient).  R <= 3.5 rates excellent,
    R <= 4.5 good, else bad.
  * overflow degree    O_D = (painted - target) / target  (may be negative
    while underpainted).
  * completion degree  O_C = painted-inside-target / target.
    A fill counts as completed when O_C > 0.8 and O_D < 3.75.
  * occupancy heatmap: 25 blocks along the board length, 15 along its
    width; boundary samples go to the lower-index block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .grid import Cell

if TYPE_CHECKING:  # Sample lives in sim; metrics only duck-types .point/.t
    from .sim import Sample


class MetricsError(Exception):
    pass


class DegenerateTrajectory(MetricsError):
    pass


class EmptyTarget(MetricsError):
    pass


class EmptyInput(MetricsError):
    pass


CLASS_EXCELLENT = "excellent"
CLASS_GOOD = "good"
CLASS_BAD = "bad"

COMPLETION_THRESHOLD = 0.8
OVERFLOW_THRESHOLD = 3.75

HEATMAP_LENGTH_BLOCKS = 25
HEATMAP_WIDTH_BLOCKS = 15


@dataclass(frozen=True)
class TrajectoryMetrics:
    path_length: float     # total traveled distance
    ideal_length: float    # straight start -> end distance
    ratio: float           # path_length / ideal_length
    rating: str            # excellent | good | bad


@dataclass(frozen=True)
class FillMetrics:
    target_area: int       # px^2 of the target cell
    painted_area: int      # px^2 painted in total
    painted_in_target: int  # px^2 painted inside the target cell
    completion: float
    overflow: float
    completed: bool


@dataclass(frozen=True)
class Heatmap:
    """Occupancy counts, shape (length blocks, width blocks) = (25, 15)."""

    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def frequencies(self) -> np.ndarray:
        arr = np.array(self.counts, dtype=float)
        total = arr.sum()
        return arr / total if total > 0 else arr


@dataclass(frozen=True)
class TimingStats:
    max: float
    min: float
    mean: float
    std: float  # population standard deviation


def classify_ratio(r: float) -> str:
    if r <= 3.5:
        return CLASS_EXCELLENT
    if r <= 4.5:
        return CLASS_GOOD
    return CLASS_BAD


def relative_movement_distance(samples: Sequence["Sample"]) -> TrajectoryMetrics:
    """Trajectory efficiency of an ordered sample sequence.

    Raises
    ------
    DegenerateTrajectory
        With fewer than 2 samples or coincident start and end points.
    """
    if len(samples) < 2:
        raise DegenerateTrajectory("need at least 2 samples")
    pts = [s.point for s in samples]
    path = 0.0
    for a, b in zip(pts, pts[1:]):
        path += math.hypot(b.x - a.x, b.y - a.y)
    ideal = math.hypot(pts[-1].x - pts[0].x, pts[-1].y - pts[0].y)
    if ideal == 0.0:
        raise DegenerateTrajectory("start and end coincide")
    r = path / ideal
    return TrajectoryMetrics(path_length=path, ideal_length=ideal, ratio=r, rating=classify_ratio(r))


def rect_pixel_window(rect: tuple[float, float, float, float], shape: tuple[int, int]) -> tuple[slice, slice]:
    """Integer pixel window [r0:r1, c0:c1] covered by a half-open board rect."""
    x0, y0, x1, y1 = rect
    h, w = shape
    c0 = max(0, math.ceil(x0))
    r0 = max(0, math.ceil(y0))
    c1 = min(w, math.ceil(x1))
    r1 = min(h, math.ceil(y1))
    return slice(r0, max(r0, r1)), slice(c0, max(c0, c1))


def fill_metrics(
    mask: np.ndarray,
    target: Cell,
    completion_threshold: float = COMPLETION_THRESHOLD,
    overflow_threshold: float = OVERFLOW_THRESHOLD,
) -> FillMetrics:
    """Fill quality of a boolean paint mask against a target cell.

    Raises
    ------
    EmptyTarget
        If the target rect covers no mask pixels.
    """
    mask = np.asarray(mask, dtype=bool)
    rs, cs = rect_pixel_window(target.rect, mask.shape)
    s_t = (rs.stop - rs.start) * (cs.stop - cs.start)
    if s_t == 0:
        raise EmptyTarget("target cell covers no pixels")
    s_c = int(mask.sum())
    s_r = int(mask[rs, cs].sum())
    o_c = s_r / s_t
    o_d = (s_c - s_t) / s_t
    return FillMetrics(
        target_area=int(s_t),
        painted_area=s_c,
        painted_in_target=s_r,
        completion=o_c,
        overflow=o_d,
        completed=(o_c > completion_threshold) and (o_d < overflow_threshold),
    )


def _block_index(value: float, extent: float, count: int) -> int:
    # boundary values belong to the lower-index block
    if value <= 0:
        return 0
    return min(math.ceil(value * count / extent) - 1, count - 1)


def heatmap(samples: Sequence["Sample"], board: tuple[float, float]) -> Heatmap:
    """Occupancy counts of tip samples over 25 x 15 board blocks."""
    w, h = board
    counts = [[0] * HEATMAP_WIDTH_BLOCKS for _ in range(HEATMAP_LENGTH_BLOCKS)]
    for s in samples:
        li = _block_index(s.point.x, w, HEATMAP_LENGTH_BLOCKS)
        wi = _block_index(s.point.y, h, HEATMAP_WIDTH_BLOCKS)
        counts[li][wi] += 1
    return Heatmap(counts=tuple(tuple(row) for row in counts))


def timing_stats(durations: Sequence[float]) -> TimingStats:
    """Max/min/mean/population-std of a nonempty duration list.

    Raises EmptyInput on an empty sequence.
    """
    if len(durations) == 0:
        raise EmptyInput("no durations")
    arr = np.asarray(durations, dtype=float)
    return TimingStats(
        max=float(arr.max()),
        min=float(arr.min()),
        mean=float(arr.mean()),
        std=float(arr.std()),
    )


def heatmap_to_csv(hm: Heatmap) -> str:
    """Normalized frequencies as CSV, one row per width block (15 rows x 25 cols)."""
    freq = hm.frequencies()
    lines = []
    for wi in range(HEATMAP_WIDTH_BLOCKS):
        lines.append(",".join(repr(float(freq[li][wi])) for li in range(HEATMAP_LENGTH_BLOCKS)))
    return "\n".join(lines) + "\n"


def heatmap_to_pgm(hm: Heatmap) -> str:
    """Counts scaled to 0..255 as a plain-text (P2) PGM image."""
    arr = np.array(hm.counts, dtype=float)
    peak = arr.max()
    scaled = np.zeros_like(arr, dtype=int) if peak == 0 else np.rint(arr * 255.0 / peak).astype(int)
    lines = ["P2", f"{HEATMAP_LENGTH_BLOCKS} {HEATMAP_WIDTH_BLOCKS}", "255"]
    for wi in range(HEATMAP_WIDTH_BLOCKS):
        lines.append(" ".join(str(int(scaled[li][wi])) for li in range(HEATMAP_LENGTH_BLOCKS)))
    return "\n".join(lines) + "\n"


SESSION_CSV_HEADER = (
    "seed,status,duration,targets,completed_fills,mean_completion,mean_overflow,"
    "mean_ratio,excellent,good,bad"
)


def session_csv_line(record) -> str:
    """One CSV line summarizing a SessionRecord."""
    fills = [t.fill for t in record.targets if t.fill is not None]
    trajs = [t.trajectory for t in record.targets if t.trajectory is not None]
    ratings = [tr.rating for tr in trajs]

    def _mean(vals):
        return repr(sum(vals) / len(vals)) if vals else ""

    return ",".join(
        [
            str(record.config.seed),
            record.status,
            repr(record.duration),
            str(len(record.targets)),
            str(sum(1 for f in fills if f.completed)),
            _mean([f.completion for f in fills]),
            _mean([f.overflow for f in fills]),
            _mean([tr.ratio for tr in trajs]),
            str(ratings.count(CLASS_EXCELLENT)),
            str(ratings.count(CLASS_GOOD)),
            str(ratings.count(CLASS_BAD)),
        ]
    )
