"""Live guidance service: one session per TCP connection, bnav/1 frames.

Clients send ``hello``, then ``command`` (target code), ``tip`` (their
brush position, any cadence) and ``paint`` (pen down/up) frames; the server
answers with ``cue``/``arrived`` frames under prompt-period gating, and a
pen-up after arrival finalizes the target with ``paint`` (mask runs) and
``summary`` frames — the same shapes a record file uses, so a client can
log the exchange straight into a replayable record.

Protocol violations are answered with an ``error`` frame and the
connection is closed.
"""

from __future__ import annotations

import json
import math
import socketserver

import numpy as np

from .geometry import Point2
from .grid import CodeOutOfRange, code_to_cell
from .guidance import GuidanceState, UnparseableCommand, next_cue, parse_command
from .metrics import DegenerateTrajectory, fill_metrics, relative_movement_distance
from .session_io import PROTO, config_to_dict, encode_frame, paint_frames
from .sim import Sample, SessionConfig, mask_to_runs


class ProtocolViolation(Exception):
    pass


class BrushNavServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], config: SessionConfig):
        super().__init__(address, SessionHandler)
        self.config = config


class SessionHandler(socketserver.StreamRequestHandler):
    """One live session; all state is confined to this connection."""

    def setup(self):
        super().setup()
        cfg: SessionConfig = self.server.config
        self.cfg = cfg
        grid = cfg.grid
        self.mask = np.zeros((int(round(grid.board_h)), int(round(grid.board_w))), dtype=bool)
        self.pen_down = False
        self.last_t = -math.inf
        self.target: dict | None = None
        # all tips ever received; summaries window this list exactly like a
        # record replay does, so boundary-time samples cannot disagree
        self.tips: list[Sample] = []

    def send_frame(self, frame: dict) -> None:
        self.wfile.write((encode_frame(frame) + "\n").encode("utf-8"))

    def _fail(self, message: str):
        self.send_frame({"type": "error", "message": message})
        raise ProtocolViolation(message)

    def _read_frame(self) -> dict | None:
        line = self.rfile.readline()
        if not line:
            return None
        try:
            frame = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._fail("malformed frame")
        if not isinstance(frame, dict) or "type" not in frame:
            self._fail("frame must be an object with a 'type' field")
        return frame

    def handle(self):
        try:
            self._handshake()
            while True:
                frame = self._read_frame()
                if frame is None:
                    return
                self._dispatch(frame)
        except ProtocolViolation:
            return
        except (BrokenPipeError, ConnectionResetError):
            return

    def _handshake(self):
        frame = self._read_frame()
        if frame is None:
            raise ProtocolViolation("closed before hello")
        if frame["type"] != "hello":
            self._fail("first frame must be hello")
        if frame.get("proto") != PROTO:
            self._fail(f"unsupported protocol {frame.get('proto')!r}, server speaks {PROTO}")
        grid = self.cfg.grid
        self.send_frame(
            {
                "type": "hello",
                "proto": PROTO,
                "board_w": grid.board_w,
                "board_h": grid.board_h,
                "rows": grid.rows,
                "cols": grid.cols,
                "period": self.cfg.policy.period,
                "brush_radius": self.cfg.brush_radius,
                "config": config_to_dict(self.cfg),
            }
        )

    def _dispatch(self, frame: dict):
        ftype = frame["type"]
        if ftype == "command":
            self._on_command(frame)
        elif ftype == "tip":
            self._on_tip(frame)
        elif ftype == "paint":
            self._on_paint(frame)
        else:
            self._fail(f"unexpected frame type {ftype!r}")

    def _on_command(self, frame: dict):
        try:
            code = parse_command(str(frame.get("code", "")), self.cfg.grid)
        except (UnparseableCommand, CodeOutOfRange) as exc:
            self._fail(str(exc))
        t = float(frame.get("t", self.last_t if self.last_t > -math.inf else 0.0))
        if self.target is not None:
            self._finalize_target(t)
        cell = code_to_cell(code, self.cfg.grid)
        self.target = {
            "code": str(code),
            "cell": cell,
            "state": GuidanceState(target=cell),
            "t_start": t,
            "t_arrived": None,
            "mask_before": self.mask.copy(),
        }

    def _on_tip(self, frame: dict):
        try:
            t = float(frame["t"])
            pos = Point2(float(frame["x"]), float(frame["y"]))
        except (KeyError, TypeError, ValueError):
            self._fail("tip frame needs numeric t, x, y")
        if t < self.last_t:
            self._fail("tip timestamps must be nondecreasing")
        self.last_t = t
        self.tips.append(Sample(t, pos))
        if self.pen_down:
            self._stamp(pos)
        if self.target is None:
            return
        state, cue = next_cue(self.target["state"], pos, t, self.cfg.policy, self.cfg.ref)
        self.target["state"] = state
        if cue is not None:
            if cue.kind == "arrived":
                self.target["t_arrived"] = cue.t
                self.send_frame({"type": "arrived", "t": cue.t, "code": self.target["code"]})
            else:
                self.send_frame({"type": "cue", "kind": cue.kind, "t": cue.t})

    def _on_paint(self, frame: dict):
        pen = frame.get("pen")
        if pen not in ("down", "up"):
            self._fail("paint frame needs pen:'down'|'up'")
        self.pen_down = pen == "down"
        if (
            pen == "up"
            and self.target is not None
            and self.target["t_arrived"] is not None
        ):
            t = float(frame.get("t", self.last_t if self.last_t > -math.inf else 0.0))
            self._finalize_target(t)

    def _stamp(self, pos: Point2):
        r = self.cfg.brush_radius
        h, w = self.mask.shape
        c0, c1 = max(0, math.ceil(pos.x - r)), min(w - 1, math.floor(pos.x + r))
        r0, r1 = max(0, math.ceil(pos.y - r)), min(h - 1, math.floor(pos.y + r))
        if c0 > c1 or r0 > r1:
            return
        dx = np.arange(c0, c1 + 1) - pos.x
        dy = np.arange(r0, r1 + 1) - pos.y
        self.mask[r0 : r1 + 1, c0 : c1 + 1] |= (dy[:, None] ** 2 + dx[None, :] ** 2) <= r * r

    def _finalize_target(self, t_end: float):
        target = self.target
        self.target = None
        delta = self.mask & ~target["mask_before"]
        summary: dict = {
            "type": "summary",
            "code": target["code"],
            "t_start": target["t_start"],
            "t_arrived": target["t_arrived"],
            "t_done": t_end,
            "duration": t_end - target["t_start"],
        }
        if delta.any():
            fill = fill_metrics(
                delta, target["cell"], self.cfg.fill_completion, self.cfg.fill_overflow
            )
            summary.update(
                s_t=fill.target_area,
                s_c=fill.painted_area,
                s_r=fill.painted_in_target,
                o_c=fill.completion,
                o_d=fill.overflow,
                completed=fill.completed,
            )
        end = target["t_arrived"] if target["t_arrived"] is not None else t_end
        seg = [s for s in self.tips if target["t_start"] <= s.t <= end]
        try:
            traj = relative_movement_distance(seg)
            summary.update(
                l_m=traj.path_length, l_i=traj.ideal_length, r=traj.ratio, **{"class": traj.rating}
            )
        except DegenerateTrajectory:
            pass
        for frame in paint_frames(mask_to_runs(delta)):
            self.send_frame(frame)
        self.send_frame(summary)


def serve(config: SessionConfig, host: str = "127.0.0.1", port: int = 7733) -> BrushNavServer:
    """Bind the guidance service; caller drives serve_forever()/shutdown()."""
    return BrushNavServer((host, port), config)
