/**
 * Replay viewer model: parse an exported bnav/1 record into the pieces the
 * UI renders — trajectory polyline, 25x15 occupancy heatmap, and the
 * stored per-target summaries. Metric values are displayed as stored; the
 * engine, not the UI, is the authority on recomputing them.
 */

import { PROTO, ProtocolError, SummaryFrame } from "./protocol.js";

export const HEATMAP_LENGTH_BLOCKS = 25;
export const HEATMAP_WIDTH_BLOCKS = 15;

export interface ReplayView {
  config: Record<string, unknown>;
  status: string;
  duration: number;
  boardW: number;
  boardH: number;
  trajectory: Array<{ t: number; x: number; y: number }>;
  /** counts[lengthBlock][widthBlock], 25 x 15 */
  heatmap: number[][];
  targets: SummaryFrame[];
  partial: boolean;
}

/** Boundary samples go to the lower-index block, matching the engine. */
export function blockIndex(value: number, extent: number, count: number): number {
  if (value <= 0) return 0;
  return Math.min(Math.ceil((value * count) / extent) - 1, count - 1);
}

export function heatmapCounts(
  points: Array<{ x: number; y: number }>,
  boardW: number,
  boardH: number,
): number[][] {
  const counts = Array.from({ length: HEATMAP_LENGTH_BLOCKS }, () =>
    new Array<number>(HEATMAP_WIDTH_BLOCKS).fill(0),
  );
  for (const p of points) {
    const li = blockIndex(p.x, boardW, HEATMAP_LENGTH_BLOCKS);
    const wi = blockIndex(p.y, boardH, HEATMAP_WIDTH_BLOCKS);
    const column = counts[li]!;
    column[wi] = (column[wi] ?? 0) + 1;
  }
  return counts;
}

export function parseRecord(text: string): ReplayView {
  const lines = text.split("\n").filter((line) => line.trim().length > 0);
  if (lines.length === 0) throw new ProtocolError("empty record");
  let partial = false;
  const frames: Array<Record<string, unknown>> = [];
  for (const line of lines) {
    try {
      frames.push(JSON.parse(line));
    } catch {
      partial = true; // truncated tail: keep what decoded
      break;
    }
  }
  const hello = frames[0];
  if (!hello || hello.type !== "hello") {
    throw new ProtocolError("record must start with a hello frame");
  }
  if (hello.proto !== PROTO) {
    throw new ProtocolError(`record schema ${String(hello.proto)} unsupported (need ${PROTO})`);
  }
  const config = (hello.config ?? {}) as Record<string, unknown>;
  const boardW = Number(config.board_w ?? 500);
  const boardH = Number(config.board_h ?? 300);
  const trajectory: Array<{ t: number; x: number; y: number }> = [];
  const targets: SummaryFrame[] = [];
  for (const frame of frames.slice(1)) {
    if (frame.type === "tip") {
      trajectory.push({ t: Number(frame.t), x: Number(frame.x), y: Number(frame.y) });
    } else if (frame.type === "summary") {
      targets.push(frame as unknown as SummaryFrame);
    }
  }
  return {
    config,
    status: String(hello.status ?? "completed"),
    duration: Number(hello.duration ?? 0),
    boardW,
    boardH,
    trajectory,
    heatmap: heatmapCounts(trajectory, boardW, boardH),
    targets,
    partial,
  };
}
