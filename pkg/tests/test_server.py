"""Live-protocol tests: handshake, guidance stream, painting, violations."""

import json
import socket
import threading
import time

import numpy as np
import pytest

from brushnav.grid import cell_at
from brushnav.session_io import loads_record
from brushnav.sim import SessionConfig
from brushnav.server import serve


@pytest.fixture()
def server():
    srv = serve(SessionConfig(seed=0), host="127.0.0.1", port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


class Client:
    """Socket client with a background reader collecting server frames."""

    def __init__(self, srv):
        host, port = srv.server_address[:2]
        self.sock = socket.create_connection((host, port), timeout=10.0)
        self.frames = []
        self.closed = threading.Event()
        self._lock = threading.Lock()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self):
        buf = b""
        try:
            while True:
                chunk = self.sock.recv(4096)
                if not chunk:
                    break
                buf += chunk
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    with self._lock:
                        self.frames.append(json.loads(line.decode("utf-8")))
        except OSError:
            pass
        self.closed.set()

    def send(self, frame):
        self.sock.sendall((json.dumps(frame) + "\n").encode("utf-8"))

    def send_raw(self, text):
        self.sock.sendall(text.encode("utf-8"))

    def snapshot(self):
        with self._lock:
            return list(self.frames)

    def wait_for(self, predicate, timeout=5.0):
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            for frame in self.snapshot():
                if predicate(frame):
                    return frame
            time.sleep(0.005)
        raise AssertionError("expected frame never arrived")

    def wait_closed(self, timeout=5.0):
        assert self.closed.wait(timeout), "server did not close the connection"

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass

    def hello(self):
        self.send({"type": "hello", "proto": "bnav/1"})
        return self.wait_for(lambda f: f["type"] in ("hello", "error"))


def drive_to_target(client, command, t0, cell, step=6.0, start=(250.0, 150.0)):
    """Stream tips straight toward the cell center until the server confirms
    arrival; returns the final position and timestamp."""
    client.send({"type": "command", "code": command})
    x, y = start
    cx, cy = cell.center
    t = t0
    for _ in range(400):
        dx, dy = cx - x, cy - y
        dist = (dx * dx + dy * dy) ** 0.5
        if dist <= step:
            x, y = cx, cy
        else:
            x += step * dx / dist
            y += step * dy / dist
        t += 0.2
        client.send({"type": "tip", "t": t, "x": x, "y": y})
        arrived = [f for f in client.snapshot() if f["type"] == "arrived" and f["t"] >= t0]
        if arrived:
            return (x, y), t
        if dist == 0.0:
            time.sleep(0.01)
    raise AssertionError("never arrived")


class TestHandshake:
    def test_hello_reports_board_and_config(self, server):
        client = Client(server)
        reply = client.hello()
        assert reply["type"] == "hello"
        assert reply["proto"] == "bnav/1"
        assert reply["board_w"] == 500.0
        assert reply["board_h"] == 300.0
        assert reply["rows"] == 8 and reply["cols"] == 8
        assert "config" in reply
        client.close()

    def test_wrong_proto_gets_error_then_close(self, server):
        client = Client(server)
        client.send({"type": "hello", "proto": "bnav/9"})
        reply = client.wait_for(lambda f: True)
        assert reply["type"] == "error"
        client.wait_closed()
        client.close()

    def test_frame_before_hello_rejected(self, server):
        client = Client(server)
        client.send({"type": "tip", "t": 0.0, "x": 1.0, "y": 1.0})
        assert client.wait_for(lambda f: True)["type"] == "error"
        client.wait_closed()
        client.close()


class TestGuidanceStream:
    def test_converging_tip_stream_ends_with_arrived(self, server):
        client = Client(server)
        client.hello()
        cell = cell_at(0, 0, SessionConfig().grid)
        drive_to_target(client, "go to aa", 0.0, cell)
        frames = [f for f in client.snapshot() if f["type"] != "hello"]
        kinds = [f["type"] for f in frames]
        assert kinds[-1] == "arrived"
        assert all(k in ("cue", "arrived") for k in kinds)
        assert any(k == "cue" for k in kinds)
        directions = {f["kind"] for f in frames if f["type"] == "cue"}
        assert directions <= {"up", "down", "left", "right"}
        client.close()

    def test_prompt_period_gating_on_wire(self, server):
        client = Client(server)
        client.hello()
        cell = cell_at(0, 0, SessionConfig().grid)
        drive_to_target(client, "aa", 0.0, cell, step=3.0)
        cue_times = [f["t"] for f in client.snapshot() if f["type"] == "cue"]
        period = SessionConfig().policy.period
        assert len(cue_times) >= 2
        for a, b in zip(cue_times, cue_times[1:]):
            assert b - a >= period - 1e-9
        client.close()

    def test_invalid_command_code_is_violation(self, server):
        client = Client(server)
        client.hello()
        client.send({"type": "command", "code": "zz"})
        assert client.wait_for(lambda f: f["type"] != "hello")["type"] == "error"
        client.wait_closed()
        client.close()

    def test_malformed_frame_gets_error_and_close(self, server):
        client = Client(server)
        client.hello()
        client.send_raw("this is not json\n")
        assert client.wait_for(lambda f: f["type"] != "hello")["type"] == "error"
        client.wait_closed()
        client.close()

    def test_decreasing_tip_time_is_violation(self, server):
        client = Client(server)
        client.hello()
        client.send({"type": "tip", "t": 5.0, "x": 1.0, "y": 1.0})
        client.send({"type": "tip", "t": 4.0, "x": 1.0, "y": 1.0})
        assert client.wait_for(lambda f: f["type"] == "error")["type"] == "error"
        client.wait_closed()
        client.close()


def paint_cell(client, cell, t0, spacing=4.0):
    """Pen down, serpentine strokes over the cell, pen up; returns end time."""
    x0, y0, x1, y1 = cell.rect
    t = t0
    client.send({"type": "paint", "pen": "down", "t": t})
    for i, yy in enumerate(np.arange(y0 + 2.0, y1, 7.0)):
        xs = np.arange(x0 + 2.0, x1, spacing)
        if i % 2:
            xs = xs[::-1]
        for xx in xs:
            t += 0.05
            client.send({"type": "tip", "t": t, "x": float(xx), "y": float(yy)})
    t += 0.05
    client.send({"type": "paint", "pen": "up", "t": t})
    client.wait_for(lambda f: f["type"] == "summary" and f["t_done"] == t)
    return t


class TestPaintAndSummary:
    def test_pen_up_after_arrival_yields_runs_and_summary(self, server):
        client = Client(server)
        client.hello()
        cell = cell_at(0, 0, SessionConfig().grid)
        _, t = drive_to_target(client, "aa", 0.0, cell)
        paint_cell(client, cell, t)
        frames = client.snapshot()
        paint = [f for f in frames if f["type"] == "paint"]
        summary = [f for f in frames if f["type"] == "summary"][-1]
        assert paint, "expected mask run frames before the summary"
        assert all("row" in f and "runs" in f for f in paint)
        assert summary["code"] == "aa"
        assert summary["o_c"] > 0.8
        assert summary["completed"] is True
        assert summary["class"] in ("excellent", "good", "bad")
        assert summary["r"] >= 1.0
        client.close()

    def test_client_logged_frames_form_a_replayable_record(self, server):
        # the contract the trainer UI relies on: hello config + logged
        # command/cue/arrived/paint/summary frames plus its own tips and
        # commands form a loadable record
        client = Client(server)
        hello = client.hello()
        cfg = SessionConfig()
        t = 0.0
        sent_tips = []

        orig_send = client.send

        def logging_send(frame):
            if frame["type"] == "tip":
                sent_tips.append(frame)
            orig_send(frame)

        client.send = logging_send
        commands = []
        for code in ("aa", "cd"):
            cell = cell_at(ord(code[0]) - 97, ord(code[1]) - 97, cfg.grid)
            commands.append({"type": "command", "code": code, "t": t})
            _, t = drive_to_target(client, code, t, cell)
            t = paint_cell(client, cell, t)
        time.sleep(0.1)

        server_frames = [f for f in client.snapshot() if f["type"] != "hello"]
        header = {
            "type": "hello",
            "proto": "bnav/1",
            "config": hello["config"],
            "status": "completed",
            "duration": t,
        }
        # interleave per-target blocks exactly like an exported record
        summaries = [f for f in server_frames if f["type"] == "summary"]
        lines = [header]
        for command, summary in zip(commands, summaries):
            lo, hi = summary["t_start"], summary["t_done"]
            lines.append(command)
            lines.extend(f for f in sent_tips if lo <= f["t"] <= hi)
            lines.extend(
                f
                for f in server_frames
                if f["type"] in ("cue", "arrived") and lo <= f["t"] <= hi
            )
            idx = server_frames.index(summary)
            k = idx - 1
            paints = []
            while k >= 0 and server_frames[k]["type"] == "paint":
                paints.append(server_frames[k])
                k -= 1
            lines.extend(reversed(paints))
            lines.append(summary)
        text = "\n".join(json.dumps(f, separators=(",", ":")) for f in lines) + "\n"

        record = loads_record(text)
        assert not record.partial
        assert [tr.code for tr in record.targets] == ["aa", "cd"]
        for target in record.targets:
            assert target.fill is not None
            assert target.fill.completed
            assert target.paint_runs
            assert target.trajectory is not None
        client.close()


class TestServeEntry:
    def test_serve_binds_requested_interface(self):
        srv = serve(SessionConfig(), host="127.0.0.1", port=0)
        try:
            assert srv.server_address[0] == "127.0.0.1"
            assert srv.server_address[1] > 0
        finally:
            srv.server_close()
