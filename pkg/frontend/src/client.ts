/**
 * Trainer session client: handshake, target commands, throttled tip
 * streaming, pen control, cue log, summaries, and record export.
 *
 * The client never computes guidance or metrics itself; every cue, mask
 * run and summary value comes from server frames. Logging both directions
 * lets it export the finished session as a bnav/1 record file that the
 * engine replays bit-for-bit.
 */

import {
  ArrivedFrame,
  CueFrame,
  CueKind,
  ErrorFrame,
  HelloFrame,
  PaintRunsFrame,
  PROTO,
  ProtocolError,
  SummaryFrame,
  commandFrame,
  decodeServerFrame,
  encodeFrame,
  helloFrame,
  penFrame,
  tipFrame,
} from "./protocol.js";
import { Transport } from "./transport.js";

export type ConnectionState =
  | "connecting"
  | "ready"
  | "closed"
  | "failed"
  | "incompatible";

export interface CueLogEntry {
  kind: CueKind | "arrived";
  t: number;
  /** wall-clock ms when the frame came off the transport */
  receivedAtMs: number;
  /** wall-clock ms when listeners (the display) were notified */
  displayedAtMs: number;
}

interface TargetBlock {
  command: { code: string; t: number };
  events: Array<CueFrame | ArrivedFrame>;
  paints: PaintRunsFrame[];
  summary: SummaryFrame | null;
}

export interface ClientOptions {
  /** millisecond clock, injectable for tests */
  nowMs?: () => number;
  /** upper bound on tip frames per second */
  tipRateHz?: number;
}

type Listener = (client: TrainerClient) => void;

export class TrainerClient {
  state: ConnectionState = "connecting";
  hello: HelloFrame | null = null;
  lastError: string | null = null;
  penDown = false;
  cueLog: CueLogEntry[] = [];
  summaries: SummaryFrame[] = [];
  /** brush position as last streamed (not throttled) */
  brush: { x: number; y: number } | null = null;
  lastT = 0;

  private readonly nowMs: () => number;
  private readonly minTipGapMs: number;
  private lastTipSentMs = -Infinity;
  private blocks: TargetBlock[] = [];
  /** every tip actually sent, for the exported record's sample stream */
  private sentTips: Array<{ t: number; x: number; y: number }> = [];
  private listeners: Listener[] = [];
  private helloWaiters: Array<(f: HelloFrame) => void> = [];
  private helloRejecters: Array<(e: Error) => void> = [];

  constructor(private readonly transport: Transport, options: ClientOptions = {}) {
    this.nowMs = options.nowMs ?? (() => Date.now());
    this.minTipGapMs = 1000 / (options.tipRateHz ?? 30);
    transport.onLine((line) => this.onLine(line));
    transport.onClose(() => {
      if (this.state === "connecting") this.state = "failed";
      else if (this.state === "ready") this.state = "closed";
      this.notify();
    });
  }

  /** Register a view refresh callback; called on every state change. */
  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this);
  }

  /** Send hello and resolve with the server's hello (board geometry). */
  handshake(): Promise<HelloFrame> {
    this.transport.send(helloFrame());
    return new Promise((resolve, reject) => {
      this.helloWaiters.push(resolve);
      this.helloRejecters.push(reject);
    });
  }

  private requireReady(): void {
    if (this.state !== "ready") {
      throw new Error(`session not ready (state: ${this.state})`);
    }
  }

  /** Issue a target command ("bc" or "go to bc"). */
  sendTarget(code: string): void {
    this.requireReady();
    const t = this.lastT;
    const normalized = normalizeCode(code);
    this.blocks.push({
      command: { code: normalized, t },
      events: [],
      paints: [],
      summary: null,
    });
    this.transport.send(commandFrame(normalized, t));
    this.notify();
  }

  /**
   * Stream the brush position; drops events beyond the tip-rate budget.
   * Returns true when a frame was actually sent.
   */
  streamTip(x: number, y: number, t: number): boolean {
    this.requireReady();
    this.brush = { x, y };
    this.lastT = Math.max(this.lastT, t);
    const now = this.nowMs();
    if (now - this.lastTipSentMs < this.minTipGapMs) {
      this.notify();
      return false;
    }
    this.lastTipSentMs = now;
    this.transport.send(tipFrame(t, x, y));
    this.sentTips.push({ t, x, y });
    this.notify();
    return true;
  }

  togglePen(): boolean {
    this.requireReady();
    this.penDown = !this.penDown;
    this.transport.send(penFrame(this.penDown ? "down" : "up", this.lastT));
    this.notify();
    return this.penDown;
  }

  close(): void {
    this.transport.close();
  }

  get arrivedCodes(): string[] {
    return this.blocks
      .filter((b) => b.events.some((e) => e.type === "arrived"))
      .map((b) => b.command.code);
  }

  get latestSummary(): SummaryFrame | null {
    return this.summaries.length ? this.summaries[this.summaries.length - 1]! : null;
  }

  /** Largest cue receipt-to-display latency observed, in ms. */
  get maxCueDisplayLatencyMs(): number {
    return this.cueLog.reduce(
      (worst, entry) => Math.max(worst, entry.displayedAtMs - entry.receivedAtMs),
      0,
    );
  }

  private currentBlock(): TargetBlock | null {
    const open = this.blocks.filter((b) => b.summary === null);
    return open.length ? open[open.length - 1]! : null;
  }

  private onLine(line: string): void {
    const receivedAtMs = this.nowMs();
    let frame;
    try {
      frame = decodeServerFrame(line);
    } catch (err) {
      this.lastError = err instanceof ProtocolError ? err.message : String(err);
      this.state = "failed";
      this.notify();
      return;
    }
    switch (frame.type) {
      case "hello": {
        if (frame.proto !== PROTO) {
          this.state = "incompatible";
          this.lastError = `engine speaks ${frame.proto}, trainer needs ${PROTO}`;
          const error = new Error(this.lastError);
          this.helloRejecters.forEach((reject) => reject(error));
        } else {
          this.hello = frame;
          this.state = "ready";
          this.helloWaiters.forEach((resolve) => resolve(frame));
        }
        this.helloWaiters = [];
        this.helloRejecters = [];
        break;
      }
      case "cue":
      case "arrived": {
        this.currentBlock()?.events.push(frame);
        const entry: CueLogEntry = {
          kind: frame.type === "cue" ? frame.kind : "arrived",
          t: frame.t,
          receivedAtMs,
          displayedAtMs: receivedAtMs,
        };
        this.cueLog.push(entry);
        this.notify(); // the display update
        entry.displayedAtMs = this.nowMs();
        return;
      }
      case "paint": {
        this.currentBlock()?.paints.push(frame);
        break;
      }
      case "summary": {
        const block = this.currentBlock();
        if (block) block.summary = frame;
        this.summaries.push(frame);
        break;
      }
      case "error": {
        this.lastError = (frame as ErrorFrame).message;
        this.state = "failed";
        break;
      }
    }
    this.notify();
  }

  /**
   * Assemble the logged session into bnav/1 record text. Only closed
   * (summarized) target blocks are exported; every sent tip is written
   * once, in time order, attributed to the block it preceded, so a replay
   * windows exactly the samples the engine's summaries used.
   */
  exportRecord(): string {
    if (!this.hello) throw new Error("no session: handshake never completed");
    const done = this.blocks.filter((b) => b.summary !== null);
    const duration = done.length
      ? done[done.length - 1]!.summary!.t_done ?? this.lastT
      : this.lastT;
    const lines: string[] = [
      encodeFrame({
        type: "hello",
        proto: PROTO,
        config: this.hello.config ?? {},
        status: "completed",
        duration,
      }),
    ];
    const tip = (entry: { t: number; x: number; y: number }) =>
      encodeFrame({ type: "tip", t: entry.t, x: entry.x, y: entry.y });
    if (done.length) {
      lines.push(...this.sentTips.filter((s) => s.t < done[0]!.command.t).map(tip));
    }
    done.forEach((block, k) => {
      const from = block.command.t;
      const until = k + 1 < done.length ? done[k + 1]!.command.t : Infinity;
      lines.push(encodeFrame({ type: "command", code: block.command.code, t: from }));
      lines.push(...this.sentTips.filter((s) => from <= s.t && s.t < until).map(tip));
      for (const event of block.events) {
        lines.push(encodeFrame(event as unknown as Record<string, unknown>));
      }
      for (const paint of block.paints) {
        lines.push(encodeFrame(paint as unknown as Record<string, unknown>));
      }
      lines.push(encodeFrame(block.summary as unknown as Record<string, unknown>));
    });
    return lines.join("\n") + "\n";
  }
}

function normalizeCode(text: string): string {
  const words = text.trim().toLowerCase().split(/\s+/);
  return words[words.length - 1] ?? text;
}
