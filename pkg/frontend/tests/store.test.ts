import { describe, expect, it } from "vitest";

import {
  type AppEvent,
  Store,
  clampK,
  hitTest,
  initialState,
  reduce,
  replay,
  screenPoints,
} from "../src/store.js";
import type { MapPayload, RetrieveResult } from "../src/types.js";

const MAP: MapPayload = {
  explained_variance: [0.7, 0.2],
  points: [
    { font_id: "alfa", x: -1, y: 0 },
    { font_id: "bravo", x: 1, y: 0 },
    { font_id: "charlie", x: 0, y: 1 },
  ],
};

const RESULTS: RetrieveResult[] = [
  { font_id: "alfa", distance: 0, best_char: "A", preview_url: "/api/preview/alfa.png" },
  { font_id: "bravo", distance: 0.5, best_char: "B", preview_url: "/api/preview/bravo.png" },
];

describe("reducer", () => {
  it("clamps k into [1, 50]", () => {
    expect(clampK(0)).toBe(1);
    expect(clampK(51)).toBe(50);
    expect(clampK(7.4)).toBe(7);
    const s = reduce(initialState(), { type: "set-k", k: 999 });
    expect(s.k).toBe(50);
  });

  it("stale query responses are ignored", () => {
    let s = initialState();
    s = reduce(s, { type: "query-started", seq: 1, query: { kind: "ref", fontId: "alfa", char: "A" } });
    s = reduce(s, { type: "query-started", seq: 2, query: { kind: "ref", fontId: "bravo", char: "B" } });
    const afterStale = reduce(s, { type: "query-results", seq: 1, results: RESULTS });
    expect(afterStale.results).toEqual([]);
    const afterFresh = reduce(afterStale, { type: "query-results", seq: 2, results: RESULTS });
    expect(afterFresh.results).toEqual(RESULTS);
    expect(afterFresh.inflightSeq).toBeNull();
  });

  it("query errors retain prior results and surface inline", () => {
    let s = initialState();
    s = reduce(s, { type: "query-started", seq: 1, query: { kind: "ref", fontId: "alfa", char: "A" } });
    s = reduce(s, { type: "query-results", seq: 1, results: RESULTS });
    s = reduce(s, { type: "query-started", seq: 2, query: { kind: "upload", fileName: "x.png" } });
    s = reduce(s, {
      type: "query-error",
      seq: 2,
      error: { status: 400, code: "bad_request", message: "cannot decode image" },
    });
    expect(s.results).toEqual(RESULTS); // prior results retained
    expect(s.error?.code).toBe("bad_request");
    const cleared = reduce(s, {
      type: "query-started",
      seq: 3,
      query: { kind: "ref", fontId: "alfa", char: "A" },
    });
    expect(cleared.error).toBeNull(); // next query clears the inline error
  });

  it("map clicks select the nearest point within 10px and ignore empty space", () => {
    let s = initialState();
    s = reduce(s, { type: "map-resized", width: 640, height: 480 });
    s = reduce(s, { type: "map-loaded", payload: MAP });
    const pts = screenPoints(s);
    expect(pts).toHaveLength(3);
    const target = pts[1]!;
    expect(hitTest(s, target.x + 3, target.y - 3)).toBe("bravo");
    const clicked = reduce(s, { type: "map-click", x: target.x + 3, y: target.y - 3 });
    expect(clicked.selectedFont).toBe("bravo");
    const empty = reduce(clicked, { type: "map-click", x: 2, y: 2 });
    expect(empty).toEqual(clicked); // empty click is a no-op
  });

  it("pan and zoom only change the viewport, never the data", () => {
    let s = initialState();
    s = reduce(s, { type: "map-loaded", payload: MAP });
    const panned = reduce(s, { type: "map-pan", dx: 30, dy: -10 });
    const zoomed = reduce(panned, { type: "map-zoom", factor: 1.5, cx: 320, cy: 240 });
    expect(zoomed.map).toEqual(s.map);
    expect(zoomed.results).toEqual(s.results);
    expect(zoomed.userView).not.toEqual(s.userView);
  });
});

describe("replay purity", () => {
  it("replaying a recorded log reproduces the exact state", () => {
    const log: AppEvent[] = [
      { type: "fonts-loaded", fonts: [{ id: "alfa", preview_url: "/api/preview/alfa.png" }] },
      { type: "charset-loaded", chars: ["A", "B"] },
      { type: "map-resized", width: 800, height: 600 },
      { type: "map-loaded", payload: MAP },
      { type: "set-k", k: 5 },
      { type: "query-started", seq: 1, query: { kind: "ref", fontId: "alfa", char: "A" } },
      { type: "query-results", seq: 1, results: RESULTS },
      { type: "map-pan", dx: 12, dy: 34 },
      { type: "map-zoom", factor: 2, cx: 100, cy: 100 },
      { type: "map-click", x: 400, y: 300 },
    ];
    const store = new Store();
    for (const ev of log) store.dispatch(ev);
    expect(store.log).toEqual(log);
    expect(replay(store.log)).toEqual(store.state);
    // replay is deterministic: running it twice gives identical states
    expect(replay(log)).toEqual(replay(log));
  });

  it("reduce never mutates its input state", () => {
    const s0 = initialState();
    const frozen = JSON.parse(JSON.stringify(s0));
    reduce(s0, { type: "map-loaded", payload: MAP });
    reduce(s0, { type: "set-k", k: 3 });
    reduce(s0, { type: "map-pan", dx: 1, dy: 1 });
    expect(s0).toEqual(frozen);
  });
});
