"""Board registration: marker corner selection and perspective transforms.

A drawing board carries four square fiducial markers, one per board corner.
Each detected marker contributes the corner that faces the board interior;
those four points define the board quad in the camera frame, and a
perspective transform (homography) maps that quad onto a canonical top-down
board rectangle.

Conventions used throughout the package:
  * +y points downward (screen coordinates).
  * Homographies act on row vectors: ``[x' y' w'] = [u v 1] @ M``, and the
    matrix is normalized so ``M[2, 2] == 1``.
  * Board corners are ordered UL, UR, LL, LR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GeometryError(Exception):
    """Base class for registration/transform failures."""


class MissingMarker(GeometryError):
    def __init__(self, marker_id: int):
        super().__init__(f"marker id {marker_id} not detected in frame")
        self.marker_id = marker_id


class DuplicateMarker(GeometryError):
    def __init__(self, marker_id: int):
        super().__init__(f"marker id {marker_id} detected more than once")
        self.marker_id = marker_id


class DegenerateQuad(GeometryError):
    """Quad has (near-)collinear or coincident corners."""


class PointAtInfinity(GeometryError):
    """Projective denominator vanished while mapping a point."""


class SingularResult(GeometryError):
    """Matrix product or normalization produced a non-invertible map."""


class NoRegistration(GeometryError):
    """No prior registration exists and the frame cannot provide one."""


class Point2(NamedTuple):
    """Planar point in board or camera pixels."""

    x: float
    y: float


@dataclass(frozen=True)
class MarkerDetection:
    """One decoded fiducial marker: its id (1..4) and 4 ordered corners."""

    id: int
    corners: tuple[Point2, Point2, Point2, Point2]

    def __post_init__(self):
        if self.id not in (1, 2, 3, 4):
            raise ValueError(f"marker id must be 1..4, got {self.id}")
        if len(self.corners) != 4:
            raise ValueError("marker must have exactly 4 corners")


@dataclass(frozen=True)
class Homography:
    """3x3 projective map acting on row vectors, normalized to m[2,2] = 1."""

    m: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("homography matrix must be 3x3")
        scale = float(np.abs(m).max())
        if scale == 0.0 or abs(m[2, 2]) < 1e-12 * scale:
            raise SingularResult("cannot normalize: m[2,2] is (near) zero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= 1e-12:
            raise SingularResult("homography is not invertible")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def __eq__(self, other) -> bool:
        return isinstance(other, Homography) and np.array_equal(self.m, other.m)


@dataclass(frozen=True)
class BoardRegistration:
    """Snapshot of the located board: corner quad and map to canonical frame."""

    corners: tuple[Point2, Point2, Point2, Point2]  # UL, UR, LL, LR
    to_canonical: Homography
    updated_at: float


# Marker id -> index of the corner that faces the board interior, for the
# fixed marker layout (id 1 = UL marker .. id 4 = LR marker).
_INNER_CORNER = {1: 3, 2: 2, 3: 1, 4: 0}

# Unit square in board corner order UL, UR, LL, LR.
UNIT_SQUARE = (Point2(0.0, 0.0), Point2(1.0, 0.0), Point2(0.0, 1.0), Point2(1.0, 1.0))


def canonical_rect(width: float, height: float) -> tuple[Point2, Point2, Point2, Point2]:
    """Canonical board rectangle corners in UL, UR, LL, LR order."""
    return (Point2(0.0, 0.0), Point2(width, 0.0), Point2(0.0, height), Point2(width, height))


def select_board_corners(markers: Iterable[MarkerDetection]) -> tuple[Point2, Point2, Point2, Point2]:
    """Pick the four board corner points from one frame of marker detections.

    Exactly one detection per id 1..4 is required.  Each marker contributes
    the corner facing the board interior; the result is ordered UL, UR, LL,
    LR.

    Raises
    ------
    DuplicateMarker, MissingMarker
    """
    seen: dict[int, MarkerDetection] = {}
    for det in markers:
        if det.id in seen:
            raise DuplicateMarker(det.id)
        seen[det.id] = det
    for marker_id in (1, 2, 3, 4):
        if marker_id not in seen:
            raise MissingMarker(marker_id)
    return tuple(seen[i].corners[_INNER_CORNER[i]] for i in (1, 2, 3, 4))


def _min_triangle_area(quad: Sequence[Point2]) -> float:
    areas = []
    for skip in range(4):
        a, b, c = [quad[i] for i in range(4) if i != skip]
        areas.append(abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / 2.0)
    return min(areas)


def _check_quad(quad: Sequence[Point2]) -> None:
    if len(quad) != 4:
        raise ValueError("quad must have exactly 4 points")
    xs = [p.x for p in quad]
    ys = [p.y for p in quad]
    bbox_area = (max(xs) - min(xs)) * (max(ys) - min(ys))
    if bbox_area == 0.0 or _min_triangle_area(quad) < 1e-9 * bbox_area:
        raise DegenerateQuad("quad corners are (near-)collinear or coincident")


def _normalize_points(points: Sequence[Point2]) -> tuple[np.ndarray, np.ndarray]:
    """Similarity transform (row-vector form) centering the points at the
    origin with RMS distance sqrt(2); returns (transform, transformed Nx2)."""
    arr = np.array(points, dtype=float)
    centroid = arr.mean(axis=0)
    rms = math.sqrt(float(((arr - centroid) ** 2).sum(axis=1).mean()))
    s = math.sqrt(2.0) / rms if rms > 0 else 1.0
    t = np.array([
        [s, 0.0, 0.0],
        [0.0, s, 0.0],
        [-s * centroid[0], -s * centroid[1], 1.0],
    ])
    return t, (arr - centroid) * s


def _solve_projective(src: Sequence[Point2], dst: Sequence[Point2]) -> Homography:
    """Least-squares projective map src[i] -> dst[i] via the SVD null space,
    with similarity pre-conditioning of both point sets."""
    t_src, src_n = _normalize_points(src)
    t_dst, dst_n = _normalize_points(dst)
    a = np.zeros((2 * len(src_n), 9))
    for i, ((u, v), (x, y)) in enumerate(zip(src_n, dst_n)):
        # unknowns ordered a11,a12,a13,a21,a22,a23,a31,a32,a33
        a[2 * i] = [u, 0.0, -x * u, v, 0.0, -x * v, 1.0, 0.0, -x]
        a[2 * i + 1] = [0.0, u, -y * u, 0.0, v, -y * v, 0.0, 1.0, -y]
    _, _, vt = np.linalg.svd(a)
    m_n = vt[-1].reshape(3, 3)
    m = t_src @ m_n @ np.linalg.inv(t_dst)
    return Homography(m)


def homography_unit_square(quad: Sequence[Point2], direction: str = "forward") -> Homography:
    """Homography between a convex quad and the unit square.

    ``direction="forward"`` maps quad -> unit square, ``"inverse"`` maps unit
    square -> quad.  The quad and the unit square are both taken in UL, UR,
    LL, LR order, so corner i corresponds to unit corner i.

    Raises
    ------
    DegenerateQuad
        If three corners are (near-)collinear or two coincide.
    """
    quad = tuple(Point2(float(p[0]), float(p[1])) for p in quad)
    _check_quad(quad)
    if direction == "forward":
        return _solve_projective(quad, UNIT_SQUARE)
    if direction == "inverse":
        return _solve_projective(UNIT_SQUARE, quad)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def compose_homography(m1: Homography, m2: Homography) -> Homography:
    """Compose two maps: applying the result equals applying m1 then m2.

    Under the row-vector convention this is the plain matrix product
    ``m1.m @ m2.m``, renormalized to m[2,2] = 1.

    Raises
    ------
    SingularResult
        If the product cannot be normalized or is not invertible.
    """
    return Homography(m1.m @ m2.m)


def apply_homography(h: Homography, p: Point2) -> Point2:
    """Map one point through ``h`` and dehomogenize.

    Raises
    ------
    PointAtInfinity
        If the projective denominator vanishes at ``p``.
    """
    u, v = float(p[0]), float(p[1])
    m = h.m
    w = m[0, 2] * u + m[1, 2] * v + m[2, 2]
    if abs(w) <= 1e-12:
        raise PointAtInfinity(f"denominator vanishes at ({u}, {v})")
    x = (m[0, 0] * u + m[1, 0] * v + m[2, 0]) / w
    y = (m[0, 1] * u + m[1, 1] * v + m[2, 1]) / w
    return Point2(float(x), float(y))


def _is_convex_quad(corners: Sequence[Point2]) -> bool:
    # corners come in UL, UR, LL, LR order; cyclic order is UL, UR, LR, LL
    cyc = [corners[0], corners[1], corners[3], corners[2]]
    signs = []
    for i in range(4):
        a, b, c = cyc[i], cyc[(i + 1) % 4], cyc[(i + 2) % 4]
        cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x)
        signs.append(cross > 0)
    return all(signs) or not any(signs)


def register_board(
    prev: BoardRegistration | None,
    markers: Sequence[MarkerDetection],
    canonical_size: tuple[float, float],
    now: float,
) -> BoardRegistration:
    """Update the board registration from one frame of marker detections.

    A fresh registration is produced only when the frame contains exactly one
    detection for every id 1..4; otherwise the previous registration is kept
    unchanged (stale timestamp included).

    Raises
    ------
    NoRegistration
        If the frame is incomplete and there is no previous registration.
    DegenerateQuad
        If the selected corners do not form a usable convex quad.
    """
    w, h = canonical_size
    if w <= 0 or h <= 0:
        raise ValueError("canonical size must be positive")
    ids = sorted(m.id for m in markers)
    if ids != [1, 2, 3, 4]:
        if prev is None:
            raise NoRegistration("incomplete marker frame and no prior registration")
        return prev
    corners = select_board_corners(markers)
    if not _is_convex_quad(corners):
        raise DegenerateQuad("selected board corners do not form a convex quad")
    m1 = homography_unit_square(corners, "forward")
    m2 = homography_unit_square(canonical_rect(w, h), "inverse")
    return BoardRegistration(corners=corners, to_canonical=compose_homography(m1, m2), updated_at=float(now))


def parse_marker_frame(line: str) -> tuple[float, tuple[MarkerDetection, ...]]:
    """Parse one marker-frame line: ``t id1 x1 y1 ... x4 y4 | id2 ...``.

    Raises ValueError on malformed lines.
    """
    chunks = [c.split() for c in line.strip().split("|")]
    if not chunks or len(chunks[0]) != 10:
        raise ValueError("first chunk must be 't id x1 y1 x2 y2 x3 y3 x4 y4'")
    t = float(chunks[0][0])
    raw = [chunks[0][1:]] + chunks[1:]
    markers = []
    for fields in raw:
        if len(fields) != 9:
            raise ValueError("each marker chunk needs an id and 4 corner pairs")
        vals = [float(f) for f in fields[1:]]
        corners = tuple(Point2(vals[2 * k], vals[2 * k + 1]) for k in range(4))
        markers.append(MarkerDetection(id=int(fields[0]), corners=corners))
    return t, tuple(markers)


def read_marker_frames(path) -> list[tuple[float, tuple[MarkerDetection, ...]]]:
    """Read a marker-frame text file, skipping blank and ``#`` comment lines."""
    frames = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            frames.append(parse_marker_frame(line))
    return frames
