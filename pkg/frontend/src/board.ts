/**
 * Board view model: turns client state into a flat draw-op list.
 *
 * Rendering goes through data ops so the blind-mode guarantee (no target
 * cell, no trail, no brush; cues only) is testable without a canvas.
 */

import { TrainerClient } from "./client.js";
import { HelloFrame } from "./protocol.js";

export type DrawOp =
  | { kind: "board"; w: number; h: number }
  | { kind: "grid"; rows: number; cols: number; w: number; h: number }
  | { kind: "target-cell"; code: string; x0: number; y0: number; x1: number; y1: number }
  | { kind: "trail"; points: Array<{ x: number; y: number }> }
  | { kind: "brush"; x: number; y: number; penDown: boolean; radius: number }
  | { kind: "cue-banner"; text: string }
  | { kind: "summary-text"; lines: string[] };

export interface BoardViewState {
  hello: HelloFrame;
  targetCode: string | null;
  trail: Array<{ x: number; y: number }>;
  brush: { x: number; y: number } | null;
  penDown: boolean;
  lastCue: string | null;
  blind: boolean;
}

/** Rectangle of a two-letter cell code on the hello's board geometry. */
export function cellRect(code: string, hello: HelloFrame) {
  const row = code.charCodeAt(0) - 97;
  const col = code.charCodeAt(1) - 97;
  if (row < 0 || row >= hello.rows || col < 0 || col >= hello.cols) {
    throw new Error(`cell code out of range: ${code}`);
  }
  const cw = hello.board_w / hello.cols;
  const ch = hello.board_h / hello.rows;
  return { x0: col * cw, y0: row * ch, x1: (col + 1) * cw, y1: (row + 1) * ch };
}

export const cueText = (kind: string): string =>
  kind === "arrived" ? "arrived!" : kind;

/**
 * Draw ops for the current state. In blind mode the target cell, trail and
 * brush are withheld entirely; only the bare board and cue banner render.
 */
export function drawOps(state: BoardViewState): DrawOp[] {
  const { hello } = state;
  const ops: DrawOp[] = [{ kind: "board", w: hello.board_w, h: hello.board_h }];
  if (!state.blind) {
    ops.push({ kind: "grid", rows: hello.rows, cols: hello.cols, w: hello.board_w, h: hello.board_h });
    if (state.targetCode) {
      ops.push({ kind: "target-cell", code: state.targetCode, ...cellRect(state.targetCode, hello) });
    }
    if (state.trail.length > 1) {
      ops.push({ kind: "trail", points: state.trail });
    }
    if (state.brush) {
      ops.push({
        kind: "brush",
        x: state.brush.x,
        y: state.brush.y,
        penDown: state.penDown,
        radius: hello.brush_radius,
      });
    }
  }
  if (state.lastCue) {
    ops.push({ kind: "cue-banner", text: cueText(state.lastCue) });
  }
  return ops;
}

/** Human-readable lines for the latest target summary. */
export function summaryLines(client: TrainerClient): string[] {
  const summary = client.latestSummary;
  if (!summary) return [];
  const lines = [`target ${summary.code}: done in ${fmt(summary.duration)}s`];
  if (summary.o_c !== undefined) {
    lines.push(
      `completion ${fmt(summary.o_c)} overflow ${fmt(summary.o_d)}` +
        (summary.completed ? " (completed)" : " (not completed)"),
    );
  }
  if (summary.r !== undefined) {
    lines.push(`movement ratio ${fmt(summary.r)} (${summary.class})`);
  }
  return lines;
}

const fmt = (v: number | null | undefined): string =>
  v === null || v === undefined ? "?" : (Math.round(v * 1000) / 1000).toString();
