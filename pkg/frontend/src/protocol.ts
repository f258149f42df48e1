/**
 * bnav/1 frame types and line codec.
 *
 * Files and the live wire share one schema: UTF-8 lines, each a JSON object
 * with a `type` field. The trainer only ever interprets server frames; its
 * own frames are built through the encode helpers so field names stay fixed.
 */

export const PROTO = "bnav/1";

export type CueKind = "up" | "down" | "left" | "right";

export interface HelloFrame {
  type: "hello";
  proto: string;
  board_w: number;
  board_h: number;
  rows: number;
  cols: number;
  period: number;
  brush_radius: number;
  config?: Record<string, unknown>;
}

export interface CueFrame {
  type: "cue";
  kind: CueKind;
  t: number;
}

export interface ArrivedFrame {
  type: "arrived";
  t: number;
  code: string;
}

/** Per-row run-length encoding of pixels painted during one target. */
export interface PaintRunsFrame {
  type: "paint";
  row: number;
  runs: Array<[number, number]>;
}

export interface SummaryFrame {
  type: "summary";
  code: string;
  t_start: number;
  t_arrived: number | null;
  t_done: number | null;
  duration: number | null;
  s_t?: number;
  s_c?: number;
  s_r?: number;
  o_c?: number;
  o_d?: number;
  completed?: boolean;
  l_m?: number;
  l_i?: number;
  r?: number;
  class?: string;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame =
  | HelloFrame
  | CueFrame
  | ArrivedFrame
  | PaintRunsFrame
  | SummaryFrame
  | ErrorFrame;

export class ProtocolError extends Error {}

const SERVER_TYPES = new Set(["hello", "cue", "arrived", "paint", "summary", "error"]);

/** Parse one line into a server frame; malformed input throws ProtocolError. */
export function decodeServerFrame(line: string): ServerFrame {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    throw new ProtocolError(`not valid JSON: ${line.slice(0, 80)}`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const type = (parsed as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) {
    throw new ProtocolError(`unknown server frame type: ${String(type)}`);
  }
  return parsed as ServerFrame;
}

export function encodeFrame(frame: Record<string, unknown>): string {
  return JSON.stringify(frame);
}

export const helloFrame = () => encodeFrame({ type: "hello", proto: PROTO });

export const commandFrame = (code: string, t: number) =>
  encodeFrame({ type: "command", code, t });

export const tipFrame = (t: number, x: number, y: number) =>
  encodeFrame({ type: "tip", t, x, y });

export const penFrame = (pen: "down" | "up", t: number) =>
  encodeFrame({ type: "paint", pen, t });

/** Splits a byte/char stream into complete newline-terminated lines. */
export class LineBuffer {
  private pending = "";

  push(chunk: string): string[] {
    this.pending += chunk;
    const lines = this.pending.split("\n");
    this.pending = lines.pop() ?? "";
    return lines.filter((line) => line.trim().length > 0);
  }

  /** Whatever arrived after the final newline (diagnostics only). */
  get rest(): string {
    return this.pending;
  }
}
