"""Brush-tip localization on edge chains, plus the detection-channel model.

The tip of a brush silhouette is the point of maximum window curvature on
its traced edge chain: for point i and window half-width j,

    cur_i = sqrt( (sum_{k=-j..j} (x_{i+k} - x_i))^2
                + (sum_{k=-j..j} (y_{i+k} - y_i))^2 )

Open chains define the profile on interior indices j..M-1-j; closed chains
wrap around.  The camera+detector front-end is replaced by a parametric
channel (Gaussian jitter, dropout, fixed tick latency) that degrades the
simulator's ground-truth tip.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Point2


class TipDetectError(Exception):
    pass


class ChainTooShort(TipDetectError):
    pass


class NoEdges(TipDetectError):
    pass


@dataclass(frozen=True)
class EdgeChain:
    """Ordered polyline of edge points; closed chains wrap (last != first)."""

    points: tuple[Point2, ...]
    closed: bool = False

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("edge chain needs at least 2 points")
        for a, b in zip(self.points, self.points[1:]):
            if a == b:
                raise ValueError("consecutive chain points must be distinct")
        if self.closed and self.points[0] == self.points[-1]:
            raise ValueError("closed chain must not repeat its first point")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CurvatureProfile:
    """(index, curvature) per evaluated chain point, in index order."""

    values: tuple[tuple[int, float], ...]

    def argmax_index(self) -> int:
        """Chain index of the maximal curvature; ties -> lowest index."""
        best_i, best = self.values[0]
        for i, cur in self.values[1:]:
            if cur > best:
                best_i, best = i, cur
        return best_i


@dataclass(frozen=True)
class TipDetection:
    point: Point2
    t: float
    confidence: float


@dataclass(frozen=True)
class DetectorNoiseModel:
    """Parametric stand-in for the camera/CNN tip detector.

    sigma: isotropic Gaussian jitter (board px) per axis.
    dropout_p: probability a frame yields no detection.
    latency_ticks: delivery delay in simulator ticks.
    """

    sigma: float = 0.0
    dropout_p: float = 0.0
    latency_ticks: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not (0.0 <= self.dropout_p <= 1.0):
            raise ValueError("dropout_p must be in [0, 1]")
        if self.latency_ticks < 0 or int(self.latency_ticks) != self.latency_ticks:
            raise ValueError("latency_ticks must be a nonnegative integer")


def curvature_profile(chain: EdgeChain, j: int = 5) -> CurvatureProfile:
    """Window curvature at every valid chain index.

    Open chains require at least 2j+1 points and skip the first/last j
    indices; closed chains evaluate every index with wraparound.

    Raises
    ------
    ChainTooShort
        For an open chain with fewer than 2j+1 points.
    """
    if j < 1:
        raise ValueError("window half-width j must be >= 1")
    pts = chain.points
    n = len(pts)
    if chain.closed:
        indices = range(n)
    else:
        if n < 2 * j + 1:
            raise ChainTooShort(f"open chain of {n} points cannot support j={j}")
        indices = range(j, n - j)
    values = []
    for i in indices:
        xi, yi = pts[i]
        sx = 0.0
        sy = 0.0
        for k in range(-j, j + 1):
            p = pts[(i + k) % n] if chain.closed else pts[i + k]
            sx += p[0] - xi
            sy += p[1] - yi
        values.append((i, math.sqrt(sx * sx + sy * sy)))
    return CurvatureProfile(tuple(values))


def tip_center(chain: EdgeChain, j: int = 5) -> Point2:
    """Chain point of maximal curvature (ties -> lowest index)."""
    profile = curvature_profile(chain, j)
    return chain.points[profile.argmax_index()]


# Neighbor preference for chain tracing: axis moves first, E/W before S/N,
# so 2-4 px wide gradient bands are covered in a snake pattern.
_TRACE_ORDER = ((0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1))


def _greedy_trace(pixels: set[tuple[int, int]], start: tuple[int, int]) -> list[tuple[int, int]]:
    chain = [start]
    visited = {start}
    r, c = start
    while True:
        for dr, dc in _TRACE_ORDER:
            nxt = (r + dr, c + dc)
            if nxt in pixels and nxt not in visited:
                chain.append(nxt)
                visited.add(nxt)
                r, c = nxt
                break
        else:
            return chain


def trace_edge_chain(raster, threshold: float) -> EdgeChain:
    """Trace the longest edge chain of a grayscale raster.

    Gradient magnitude (central differences) is thresholded into edge
    pixels; each 8-connected component is traced greedily from its
    topmost-leftmost pixel, and the longest resulting chain is returned with
    x = column, y = row.

    Raises
    ------
    NoEdges
        If no pixel exceeds the threshold (or no traceable chain remains).
    """
    arr = np.asarray(raster, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("raster must be a nonempty 2-D grid")
    gy, gx = np.gradient(arr)
    mask = np.hypot(gx, gy) > threshold
    if not mask.any():
        raise NoEdges("no pixel exceeds the gradient threshold")
    labels, n_labels = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    best: list[tuple[int, int]] = []
    for lab in range(1, n_labels + 1):
        rows, cols = np.nonzero(labels == lab)
        pixels = set(zip(rows.tolist(), cols.tolist()))
        start = (int(rows[0]), int(cols[0]))  # nonzero scans row-major: topmost-leftmost
        chain = _greedy_trace(pixels, start)
        if len(chain) > len(best):
            best = chain
    if len(best) < 2:
        raise NoEdges("edges too fragmented to trace a chain")
    return EdgeChain(points=tuple(Point2(float(c), float(r)) for r, c in best), closed=False)


def simulate_detection(
    true_tip: Point2,
    model: DetectorNoiseModel,
    rng: np.random.Generator,
    t: float,
) -> TipDetection | None:
    """One detector frame: dropout, then per-axis Gaussian jitter.

    The jitter draws are consumed even on dropped frames, so runs that
    differ only in dropout_p stay coupled draw-for-draw.  Latency is applied
    by DetectorChannel, which owns the tick queue; this function alone is
    the latency-0 channel.
    """
    dropped = rng.random() < model.dropout_p
    dx, dy = rng.normal(0.0, model.sigma, size=2) if model.sigma > 0 else (0.0, 0.0)
    if dropped:
        return None
    point = Point2(true_tip.x + float(dx), true_tip.y + float(dy))
    return TipDetection(point=point, t=float(t), confidence=1.0 - model.dropout_p)


class DetectorChannel:
    """Detection stream with the model's tick latency applied.

    Owns a private rng stream; one channel per session, never shared.
    """

    def __init__(self, model: DetectorNoiseModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self._queue: deque[TipDetection | None] = deque()

    def sample(self, true_tip: Point2, t: float) -> TipDetection | None:
        """Feed one tick's true tip; returns the detection captured
        latency_ticks ticks ago (None before the pipe fills or on dropout)."""
        self._queue.append(simulate_detection(true_tip, self.model, self.rng, t))
        if len(self._queue) > self.model.latency_ticks:
            return self._queue.popleft()
        return None


def save_chain(chain: EdgeChain, path) -> None:
    """Write a chain as text: header ``closed:0|1``, then one ``x y`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"closed:{int(chain.closed)}\n")
        for p in chain.points:
            fh.write(f"{p.x!r} {p.y!r}\n")


def load_chain(path) -> EdgeChain:
    """Read a chain written by save_chain."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("closed:") or header[7:] not in ("0", "1"):
            raise ValueError(f"bad chain header: {header!r}")
        closed = header[7:] == "1"
        points = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            xs, ys = line.split()
            points.append(Point2(float(xs), float(ys)))
    return EdgeChain(points=tuple(points), closed=closed)
