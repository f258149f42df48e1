"""Shared test utilities: quad generators and independent solve oracles."""

import numpy as np

from brushnav.geometry import MarkerDetection, Point2


def _min_triangle_area(pts):
    areas = []
    for skip in range(4):
        a, b, c = [pts[i] for i in range(4) if i != skip]
        areas.append(abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / 2.0)
    return min(areas)


def _is_convex(pts):
    cyc = [pts[0], pts[1], pts[3], pts[2]]  # UL, UR, LR, LL
    signs = []
    for i in range(4):
        a, b, c = cyc[i], cyc[(i + 1) % 4], cyc[(i + 2) % 4]
        signs.append((b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) > 0)
    return all(signs) or not any(signs)


def random_convex_quad(rng, lo=5.0, hi=50.0):
    """Well-conditioned random convex quad in UL, UR, LL, LR order."""
    while True:
        w = rng.uniform(lo, hi)
        h = rng.uniform(lo, hi)
        ox, oy = rng.uniform(-20.0, 20.0, size=2)
        base = [(ox, oy), (ox + w, oy), (ox, oy + h), (ox + w, oy + h)]
        jit = 0.18 * min(w, h)
        pts = tuple(
            Point2(x + rng.uniform(-jit, jit), y + rng.uniform(-jit, jit)) for x, y in base
        )
        if _is_convex(pts) and _min_triangle_area(pts) > 0.05 * w * h:
            return pts


def direct_homography_8x8(src, dst):
    """Oracle: dense 8x8 solve of the 4-correspondence constraints.

    Row-vector convention ([x' y' w'] = [u v 1] M) with m33 fixed to 1.
    """
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((u, v), (x, y)) in enumerate(zip(src, dst)):
        a[2 * i] = [u, v, 1.0, 0.0, 0.0, 0.0, -x * u, -x * v]
        b[2 * i] = x
        a[2 * i + 1] = [0.0, 0.0, 0.0, u, v, 1.0, -y * u, -y * v]
        b[2 * i + 1] = y
    q = np.linalg.solve(a, b)
    return np.array(
        [
            [q[0], q[3], q[6]],
            [q[1], q[4], q[7]],
            [q[2], q[5], 1.0],
        ]
    )


def random_marker_layout(rng):
    """Markers at the corners of a random convex board quad.

    Returns (markers in random order, expected UL/UR/LL/LR corner points).
    Marker j's interior-facing corner is placed at the board corner; the
    other three corners sit strictly farther from the board center.
    """
    board = random_convex_quad(rng, lo=150.0, hi=400.0)
    inner_index = {1: 3, 2: 2, 3: 1, 4: 0}
    gx = sum(p.x for p in board) / 4.0
    gy = sum(p.y for p in board) / 4.0
    markers = []
    for marker_id, corner in zip((1, 2, 3, 4), board):
        ux, uy = corner.x - gx, corner.y - gy
        norm = (ux * ux + uy * uy) ** 0.5
        ux, uy = ux / norm, uy / norm
        px, py = -uy, ux
        size = rng.uniform(8.0, 16.0)
        outward = [
            Point2(corner.x + ux * size, corner.y + uy * size),
            Point2(corner.x + ux * size + px * size, corner.y + uy * size + py * size),
            Point2(corner.x + px * size, corner.y + py * size),
        ]
        corners = [None] * 4
        corners[inner_index[marker_id]] = corner
        spots = [i for i in range(4) if i != inner_index[marker_id]]
        for slot, p in zip(spots, outward):
            corners[slot] = p
        markers.append(MarkerDetection(id=marker_id, corners=tuple(corners)))
    order = rng.permutation(4)
    return [markers[i] for i in order], board
