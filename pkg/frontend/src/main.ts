/**
 * Browser trainer: canvas board, pointer-driven brush, live cues, replay.
 *
 * Connects to the engine through the ws<->tcp bridge. The person plays the
 * blindfolded painter: type a target, follow the spoken/displayed cues,
 * space toggles the pen. Blind mode hides everything except the cues.
 */

import { drawOps, summaryLines, DrawOp } from "./board.js";
import { TrainerClient } from "./client.js";
import { browserCuePresenter } from "./speech.js";
import { parseRecord, ReplayView } from "./replay.js";
import { WebSocketTransport } from "./transport.js";

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const canvas = $("board") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = $("status");
const cueEl = $("cue");
const logEl = $("log");

let client: TrainerClient | null = null;
let sessionT0 = 0;
let targetCode: string | null = null;
let trail: Array<{ x: number; y: number }> = [];
let blind = false;
const presenter = browserCuePresenter(false);
let lastCueCount = 0;

function nowT(): number {
  return (performance.now() - sessionT0) / 1000;
}

function render(): void {
  if (!client || !client.hello) return;
  const hello = client.hello;
  canvas.width = hello.board_w;
  canvas.height = hello.board_h;
  const ops = drawOps({
    hello,
    targetCode,
    trail,
    brush: client.brush,
    penDown: client.penDown,
    lastCue: client.cueLog.length ? client.cueLog[client.cueLog.length - 1]!.kind : null,
    blind,
  });
  for (const op of ops) paint(op);
  cueEl.textContent = client.cueLog.length
    ? client.cueLog[client.cueLog.length - 1]!.kind
    : "–";
  logEl.textContent = summaryLines(client).join("\n");
}

function paint(op: DrawOp): void {
  switch (op.kind) {
    case "board":
      ctx.fillStyle = "#fbf7ef";
      ctx.fillRect(0, 0, op.w, op.h);
      break;
    case "grid": {
      ctx.strokeStyle = "#d8d2c4";
      ctx.lineWidth = 1;
      for (let c = 1; c < op.cols; c++) {
        const x = (c * op.w) / op.cols;
        ctx.beginPath();
        ctx.moveTo(x, 0);
        ctx.lineTo(x, op.h);
        ctx.stroke();
      }
      for (let r = 1; r < op.rows; r++) {
        const y = (r * op.h) / op.rows;
        ctx.beginPath();
        ctx.moveTo(0, y);
        ctx.lineTo(op.w, y);
        ctx.stroke();
      }
      break;
    }
    case "target-cell":
      ctx.fillStyle = "rgba(255, 196, 0, 0.35)";
      ctx.fillRect(op.x0, op.y0, op.x1 - op.x0, op.y1 - op.y0);
      break;
    case "trail": {
      ctx.strokeStyle = "#4466cc";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      op.points.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
      ctx.stroke();
      break;
    }
    case "brush":
      ctx.fillStyle = op.penDown ? "#aa2222" : "#333333";
      ctx.beginPath();
      ctx.arc(op.x, op.y, op.radius, 0, 2 * Math.PI);
      ctx.fill();
      break;
    case "cue-banner":
      ctx.fillStyle = "#000000";
      ctx.font = "16px sans-serif";
      ctx.fillText(op.text, 8, 20);
      break;
    case "summary-text":
      break;
  }
}

async function connect(): Promise<void> {
  const url = ($("endpoint") as HTMLInputElement).value;
  statusEl.textContent = "connecting…";
  try {
    const transport = await WebSocketTransport.connect(url);
    client = new TrainerClient(transport);
    client.subscribe(() => {
      statusEl.textContent = client!.state + (client!.lastError ? `: ${client!.lastError}` : "");
      if (client!.cueLog.length > lastCueCount) {
        lastCueCount = client!.cueLog.length;
        presenter.present(client!.cueLog[client!.cueLog.length - 1]!.kind);
      }
      render();
    });
    await client.handshake();
    sessionT0 = performance.now();
    statusEl.textContent = "ready";
    render();
  } catch (err) {
    statusEl.textContent = `connection failed: ${err instanceof Error ? err.message : err}`;
  }
}

function wire(): void {
  $("connect").onclick = () => void connect();
  $("go").onclick = () => {
    if (!client || client.state !== "ready") return;
    const code = ($("target") as HTMLInputElement).value;
    targetCode = code.trim().toLowerCase().split(/\s+/).pop() ?? null;
    trail = [];
    client.sendTarget(code);
  };
  $("blind").onclick = () => {
    blind = ($("blind") as HTMLInputElement).checked;
    render();
  };
  $("speech").onclick = () => presenter.toggle();
  $("export").onclick = () => {
    if (!client) return;
    const blob = new Blob([client.exportRecord()], { type: "application/x-ndjson" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.bnav";
    a.click();
  };
  canvas.addEventListener("pointermove", (event) => {
    if (!client || client.state !== "ready") return;
    const rect = canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
    trail.push({ x, y });
    client.streamTip(x, y, nowT());
  });
  window.addEventListener("keydown", (event) => {
    if (event.code === "Space" && client && client.state === "ready") {
      event.preventDefault();
      client.togglePen();
    }
  });
  ($("replay-file") as HTMLInputElement).onchange = async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) return;
    renderReplay(parseRecord(await file.text()));
  };
}

function renderReplay(view: ReplayView): void {
  canvas.width = view.boardW;
  canvas.height = view.boardH;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, view.boardW, view.boardH);
  const peak = Math.max(1, ...view.heatmap.flat());
  const bw = view.boardW / view.heatmap.length;
  const bh = view.boardH / view.heatmap[0]!.length;
  view.heatmap.forEach((column, li) =>
    column.forEach((count, wi) => {
      if (!count) return;
      ctx.fillStyle = `rgba(180, 40, 40, ${0.15 + (0.85 * count) / peak})`;
      ctx.fillRect(li * bw, wi * bh, bw, bh);
    }),
  );
  ctx.strokeStyle = "#224488";
  ctx.beginPath();
  view.trajectory.forEach((p, i) => (i ? ctx.lineTo(p.x, p.y) : ctx.moveTo(p.x, p.y)));
  ctx.stroke();
  logEl.textContent = view.targets
    .map((s) => `${s.code}: o_c=${s.o_c ?? "?"} o_d=${s.o_d ?? "?"} r=${s.r ?? "?"} ${s.class ?? ""}`)
    .join("\n");
  statusEl.textContent = `replay: ${view.status}, ${view.duration.toFixed(1)}s, ${view.trajectory.length} samples`;
}

wire();
