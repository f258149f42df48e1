import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { ProtocolError } from "../src/protocol.js";
import { blockIndex, heatmapCounts, parseRecord } from "../src/replay.js";

const FIXTURE = readFileSync(join(__dirname, "fixtures", "two_target.bnav"), "utf-8");

describe("parseRecord", () => {
  it("loads an engine-exported two-target record", () => {
    const view = parseRecord(FIXTURE);
    expect(view.status).toBe("completed");
    expect(view.duration).toBeGreaterThan(100);
    expect(view.boardW).toBe(500);
    expect(view.boardH).toBe(300);
    expect(view.targets.map((t) => t.code)).toEqual(["bc", "eg"]);
    for (const target of view.targets) {
      expect(target.o_c).toBeGreaterThan(0.8);
      expect(target.class).toBeDefined();
    }
    expect(view.trajectory.length).toBeGreaterThan(100);
    expect(view.partial).toBe(false);
  });

  it("heatmap counts every sample exactly once", () => {
    const view = parseRecord(FIXTURE);
    const total = view.heatmap.flat().reduce((a, b) => a + b, 0);
    expect(total).toBe(view.trajectory.length);
    expect(view.heatmap.length).toBe(25);
    expect(view.heatmap[0]!.length).toBe(15);
  });

  it("rejects unknown schema versions", () => {
    const bumped = FIXTURE.replace('"proto":"bnav/1"', '"proto":"bnav/9"');
    expect(() => parseRecord(bumped)).toThrow(ProtocolError);
    expect(() => parseRecord("")).toThrow(ProtocolError);
    expect(() => parseRecord('{"type":"tip","t":0,"x":0,"y":0}\n')).toThrow(ProtocolError);
  });

  it("flags truncated records but still parses the prefix", () => {
    const cut = FIXTURE.slice(0, FIXTURE.length - 25);
    const view = parseRecord(cut);
    expect(view.partial).toBe(true);
    expect(view.trajectory.length).toBeGreaterThan(0);
  });
});

describe("binning", () => {
  it("boundary values go to the lower-index block", () => {
    expect(blockIndex(0, 500, 25)).toBe(0);
    expect(blockIndex(20, 500, 25)).toBe(0);
    expect(blockIndex(20.0001, 500, 25)).toBe(1);
    expect(blockIndex(500, 500, 25)).toBe(24);
  });

  it("counts land in the right blocks", () => {
    const counts = heatmapCounts(
      [
        { x: 5, y: 5 },
        { x: 5, y: 5 },
        { x: 499, y: 299 },
      ],
      500,
      300,
    );
    expect(counts[0]![0]).toBe(2);
    expect(counts[24]![14]).toBe(1);
  });
});
