import { describe, expect, it } from "vitest";

import type { RecolorResponse } from "./api.js";
import { Session } from "./session.js";

function response(refs: string[], granularity = "fine"): RecolorResponse {
  return {
    granularity,
    threshold: 0.55,
    source_colors: [{ rgb: [1, 2, 3], confidence: 1.0, element_id: "e0" }],
    regions: [],
    results: refs.map((ref) => ({
      result_ref: ref,
      image_ref: ref,
      design_ref: `${ref}-design`,
      source_color: [1, 2, 3],
      confidence: 1.0,
      region_index: 0,
      overlap_rates: [1.0],
      delta_L: [0.0],
      clamped: false,
    })),
  };
}

function fakeApi() {
  const calls: { kind: string; args: unknown[] }[] = [];
  const assets = new Map<string, Uint8Array>([
    ["r1-design", new Uint8Array([10, 11])],
    ["r2-design", new Uint8Array([20, 21])],
  ]);
  const api = {
    recolor: async (...args: unknown[]) => {
      calls.push({ kind: "recolor", args });
      return response(["r1", "r1b"], "coarse");
    },
    iterate: async (...args: unknown[]) => {
      calls.push({ kind: "iterate", args });
      return response(["r2"]);
    },
    fetchAsset: async (ref: string) => {
      const bytes = assets.get(ref);
      if (!bytes) throw new Error("missing");
      return bytes;
    },
  };
  return { api, calls };
}

describe("Session", () => {
  it("recolors first, iterates after a committed choice", async () => {
    const { api, calls } = fakeApi();
    const session = new Session(api as never, "d1");
    const r1 = await session.submitInstruction("make it blue");
    expect(calls[0].kind).toBe("recolor");
    expect(r1.results).toHaveLength(2);

    session.previewChoice("r1");
    session.confirmChoice();
    await session.submitInstruction("now the hat");
    expect(calls[1].kind).toBe("iterate");
    expect(calls[1].args).toEqual(["d1", "r1", "now the hat"]);
  });

  it("history is append-only with two entries after two submissions", async () => {
    const { api } = fakeApi();
    const session = new Session(api as never, "d1");
    await session.submitInstruction("a");
    await session.submitInstruction("b");
    expect(session.history).toHaveLength(2);
    expect(session.history[0].instruction).toBe("a");
    expect(session.history[1].instruction).toBe("b");
    expect(session.history[0].resultRefs).toEqual(["r1", "r1b"]);
  });

  it("coarse responses produce one card per source color result", async () => {
    const { api } = fakeApi();
    const session = new Session(api as never, "d1");
    const resp = await session.submitInstruction("the background");
    expect(resp.granularity).toBe("coarse");
    expect(resp.results.map((r) => r.result_ref)).toEqual(["r1", "r1b"]);
  });

  it("choosing then canceling leaves the base unchanged", async () => {
    const { api, calls } = fakeApi();
    const session = new Session(api as never, "d1");
    await session.submitInstruction("a");
    session.previewChoice("r1");
    session.cancelChoice();
    expect(session.baseResultRef).toBeNull();
    await session.submitInstruction("b");
    expect(calls[1].kind).toBe("recolor");
  });

  it("export returns the exact stored bytes", async () => {
    const { api } = fakeApi();
    const session = new Session(api as never, "d1");
    const bytes = await session.exportResult("r1-design");
    expect([...bytes]).toEqual([10, 11]);
    await expect(session.exportResult("gone")).rejects.toThrow();
  });
});
