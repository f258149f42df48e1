"""Board registration and homography tests against independent oracles."""

import numpy as np
import pytest

from brushnav.geometry import (
    DegenerateQuad,
    DuplicateMarker,
    Homography,
    MarkerDetection,
    MissingMarker,
    NoRegistration,
    Point2,
    PointAtInfinity,
    apply_homography,
    canonical_rect,
    compose_homography,
    homography_unit_square,
    parse_marker_frame,
    read_marker_frames,
    register_board,
    select_board_corners,
)
from helpers import direct_homography_8x8, random_convex_quad, random_marker_layout


def _square_marker(marker_id, corners):
    return MarkerDetection(id=marker_id, corners=tuple(Point2(*c) for c in corners))


def _fixed_layout_markers():
    # only the interior-facing corner of each marker matters for selection
    filler = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]
    m1 = _square_marker(1, filler + [(10.0, 10.0)])          # corner 4 -> UL
    m2 = _square_marker(2, filler[:2] + [(90.0, 10.0)] + filler[2:3])  # corner 3 -> UR
    m3 = _square_marker(3, filler[:1] + [(10.0, 90.0)] + filler[1:3])  # corner 2 -> LL
    m4 = _square_marker(4, [(90.0, 90.0)] + filler)           # corner 1 -> LR
    return [m1, m2, m3, m4]


class TestSelectBoardCorners:
    def test_fixed_index_mapping(self):
        corners = select_board_corners(_fixed_layout_markers())
        assert corners == (
            Point2(10.0, 10.0),
            Point2(90.0, 10.0),
            Point2(10.0, 90.0),
            Point2(90.0, 90.0),
        )

    def test_missing_marker(self):
        markers = [m for m in _fixed_layout_markers() if m.id != 4]
        with pytest.raises(MissingMarker) as exc:
            select_board_corners(markers)
        assert exc.value.marker_id == 4

    def test_duplicate_marker(self):
        markers = _fixed_layout_markers()
        markers.append(markers[0])
        with pytest.raises(DuplicateMarker):
            select_board_corners(markers)

    def test_input_order_invariance(self):
        markers = _fixed_layout_markers()
        expected = select_board_corners(markers)
        rng = np.random.default_rng(5)
        for _ in range(10):
            perm = rng.permutation(4)
            assert select_board_corners([markers[i] for i in perm]) == expected

    def test_inner_corner_is_nearest_to_centroid(self):
        # oracle: brute force over all 16 corners of a randomized layout
        rng = np.random.default_rng(17)
        for _ in range(50):
            markers, _ = random_marker_layout(rng)
            selected = select_board_corners(markers)
            all_pts = [p for m in markers for p in m.corners]
            gx = sum(p.x for p in all_pts) / 16.0
            gy = sum(p.y for p in all_pts) / 16.0
            by_id = {m.id: m for m in markers}
            for marker_id, chosen in zip((1, 2, 3, 4), selected):
                nearest = min(
                    by_id[marker_id].corners,
                    key=lambda p: (p.x - gx) ** 2 + (p.y - gy) ** 2,
                )
                assert chosen == nearest


class TestHomographyUnitSquare:
    def test_unit_square_gives_identity(self):
        h = homography_unit_square(canonical_rect(1.0, 1.0), "forward")
        assert np.allclose(h.m, np.eye(3), atol=1e-9)

    def test_translated_square_is_pure_translation(self):
        quad = [Point2(2.0, 3.0), Point2(3.0, 3.0), Point2(2.0, 4.0), Point2(3.0, 4.0)]
        h = homography_unit_square(quad, "inverse")
        expected = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 3.0, 1.0]])
        assert np.allclose(h.m, expected, atol=1e-9)
        assert np.allclose(apply_homography(h, Point2(0.5, 0.5)), (2.5, 3.5), atol=1e-9)

    def test_matches_direct_solve_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            quad = random_convex_quad(rng)
            h = homography_unit_square(quad, "forward")
            oracle = direct_homography_8x8(quad, canonical_rect(1.0, 1.0))
            assert np.abs(h.m - oracle / oracle[2, 2]).max() < 1e-9

    def test_correspondences_map_exactly(self):
        rng = np.random.default_rng(29)
        for _ in range(50):
            quad = random_convex_quad(rng)
            h = homography_unit_square(quad, "forward")
            for corner, unit in zip(quad, canonical_rect(1.0, 1.0)):
                mapped = apply_homography(h, corner)
                assert abs(mapped.x - unit.x) < 1e-9
                assert abs(mapped.y - unit.y) < 1e-9

    def test_degenerate_quad_rejected(self):
        collinear = [Point2(0.0, 0.0), Point2(1.0, 1.0), Point2(2.0, 2.0), Point2(0.0, 5.0)]
        with pytest.raises(DegenerateQuad):
            homography_unit_square(collinear, "forward")
        coincident = [Point2(0.0, 0.0), Point2(0.0, 0.0), Point2(1.0, 1.0), Point2(0.0, 1.0)]
        with pytest.raises(DegenerateQuad):
            homography_unit_square(coincident, "forward")

    def test_bad_direction_rejected(self):
        with pytest.raises(ValueError):
            homography_unit_square(canonical_rect(1.0, 1.0), "sideways")


class TestComposeApply:
    def test_compose_with_inverse_is_identity(self):
        rng = np.random.default_rng(31)
        quad = random_convex_quad(rng)
        h = homography_unit_square(quad, "forward")
        ident = compose_homography(h, h.inverse())
        assert np.allclose(ident.m, np.eye(3), atol=1e-9)

    def test_identity_is_neutral(self):
        rng = np.random.default_rng(37)
        quad = random_convex_quad(rng)
        h = homography_unit_square(quad, "forward")
        ident = Homography(np.eye(3))
        assert np.allclose(compose_homography(ident, h).m, h.m, atol=1e-12)
        assert np.allclose(compose_homography(h, ident).m, h.m, atol=1e-12)

    def test_two_step_equals_direct_quad_to_quad(self):
        rng = np.random.default_rng(41)
        for _ in range(100):
            src = random_convex_quad(rng)
            dst = random_convex_quad(rng)
            two_step = compose_homography(
                homography_unit_square(src, "forward"),
                homography_unit_square(dst, "inverse"),
            )
            oracle = direct_homography_8x8(src, dst)
            assert np.abs(two_step.m - oracle / oracle[2, 2]).max() < 1e-9

    def test_apply_identity_and_translation(self):
        ident = Homography(np.eye(3))
        assert apply_homography(ident, Point2(7.0, 7.0)) == Point2(7.0, 7.0)
        shift = Homography(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 2.0, 1.0]]))
        assert apply_homography(shift, Point2(0.0, 0.0)) == Point2(1.0, 2.0)

    def test_apply_matches_symbolic_formula(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            h = homography_unit_square(random_convex_quad(rng), "forward")
            u, v = rng.uniform(-5.0, 5.0, size=2)
            m = h.m
            denom = m[0, 2] * u + m[1, 2] * v + m[2, 2]
            expected = (
                (m[0, 0] * u + m[1, 0] * v + m[2, 0]) / denom,
                (m[0, 1] * u + m[1, 1] * v + m[2, 1]) / denom,
            )
            got = apply_homography(h, Point2(u, v))
            assert got.x == pytest.approx(expected[0], abs=1e-12)
            assert got.y == pytest.approx(expected[1], abs=1e-12)

    def test_apply_roundtrip_through_inverse(self):
        rng = np.random.default_rng(47)
        for _ in range(50):
            h = homography_unit_square(random_convex_quad(rng), "inverse")
            p = Point2(*rng.uniform(0.0, 1.0, size=2))
            back = apply_homography(h.inverse(), apply_homography(h, p))
            assert abs(back.x - p.x) < 1e-9
            assert abs(back.y - p.y) < 1e-9

    def test_point_at_infinity(self):
        h = Homography(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]))
        with pytest.raises(PointAtInfinity):
            apply_homography(h, Point2(3.0, -1.0))


class TestRegisterBoard:
    def test_full_frame_creates_registration(self):
        reg = register_board(None, _fixed_layout_markers(), (500.0, 300.0), now=1.5)
        assert reg.updated_at == 1.5
        assert reg.corners[0] == Point2(10.0, 10.0)

    def test_corners_map_to_canonical_rect(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            markers, board = random_marker_layout(rng)
            reg = register_board(None, markers, (500.0, 300.0), now=0.0)
            for corner, target in zip(board, canonical_rect(500.0, 300.0)):
                mapped = apply_homography(reg.to_canonical, corner)
                assert abs(mapped.x - target.x) < 1e-6
                assert abs(mapped.y - target.y) < 1e-6

    def test_incomplete_frame_keeps_previous(self):
        prev = register_board(None, _fixed_layout_markers(), (500.0, 300.0), now=1.0)
        kept = register_board(prev, _fixed_layout_markers()[:3], (500.0, 300.0), now=2.0)
        assert kept is prev
        assert kept.updated_at == 1.0

    def test_incomplete_frame_without_previous_raises(self):
        with pytest.raises(NoRegistration):
            register_board(None, _fixed_layout_markers()[:2], (500.0, 300.0), now=0.0)

    def test_jittered_replay_tracks_last_complete_frame(self):
        # replay oracle: the registration equals the most recent full frame's
        # corner selection, untouched by interleaved partial frames
        rng = np.random.default_rng(59)
        reg = None
        expected = None
        for step in range(30):
            markers, board = random_marker_layout(rng)
            if rng.random() < 0.4:  # drop one marker: partial frame
                markers = markers[:3]
            else:
                expected = select_board_corners(markers)
            if reg is None and expected is None:
                with pytest.raises(NoRegistration):
                    register_board(reg, markers, (500.0, 300.0), now=float(step))
                continue
            reg = register_board(reg, markers, (500.0, 300.0), now=float(step))
            assert reg.corners == expected


class TestMarkerFrameText:
    def test_parse_roundtrip(self):
        markers = _fixed_layout_markers()
        line = "2.5 " + " | ".join(
            f"{m.id} " + " ".join(f"{p.x} {p.y}" for p in m.corners) for m in markers
        )
        t, parsed = parse_marker_frame(line)
        assert t == 2.5
        assert list(parsed) == markers

    def test_malformed_line_raises(self):
        with pytest.raises(ValueError):
            parse_marker_frame("1.0 1 2 3")
        with pytest.raises(ValueError):
            parse_marker_frame("")

    def test_read_frames_file(self, tmp_path):
        markers = _fixed_layout_markers()
        body = " ".join(
            ["0.1"]
            + [f"{markers[0].id} " + " ".join(f"{p.x} {p.y}" for p in markers[0].corners)]
        )
        path = tmp_path / "frames.txt"
        path.write_text(f"# comment\n{body}\n\n{body}\n", encoding="utf-8")
        frames = read_marker_frames(path)
        assert len(frames) == 2
        assert frames[0][0] == 0.1
        assert frames[0][1][0] == markers[0]
