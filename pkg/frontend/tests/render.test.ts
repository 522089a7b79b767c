// @vitest-environment happy-dom
import { describe, expect, it } from "vitest";

import {
  type CanvasLike,
  drawMap,
  mapDrawCommands,
  renderError,
  renderFontOptions,
  renderResultCards,
  renderState,
  type ViewElements,
} from "../src/render.js";
import { type AppState, initialState, reduce } from "../src/store.js";
import type { MapPayload } from "../src/types.js";

const MAP: MapPayload = {
  explained_variance: [0.8, 0.15],
  points: [
    { font_id: "alfa", x: 0, y: 0 },
    { font_id: "bravo", x: 1, y: 1 },
    { font_id: "charlie", x: -1, y: 1 },
  ],
};

function sampleState(): AppState {
  let s = initialState();
  s = reduce(s, { type: "fonts-loaded", fonts: [
    { id: "alfa", preview_url: "/api/preview/alfa.png" },
    { id: "bravo", preview_url: "/api/preview/bravo.png" },
  ] });
  s = reduce(s, { type: "charset-loaded", chars: ["A", "B"] });
  s = reduce(s, { type: "map-loaded", payload: MAP });
  s = reduce(s, { type: "query-started", seq: 1, query: { kind: "ref", fontId: "alfa", char: "A" } });
  s = reduce(s, { type: "query-results", seq: 1, results: [
    { font_id: "alfa", distance: 0, best_char: "A", preview_url: "/api/preview/alfa.png" },
    { font_id: "bravo", distance: 0.25, preview_url: "/api/preview/bravo.png" },
  ] });
  return s;
}

function makeElements(): ViewElements {
  const make = (tag: string) => document.createElement(tag);
  return {
    fontSelect: make("select") as HTMLSelectElement,
    charSelect: make("select") as HTMLSelectElement,
    results: make("div") as HTMLElement,
    queryLabel: make("span") as HTMLElement,
    errorBox: make("div") as HTMLElement,
    kInput: make("input") as HTMLInputElement,
    canvas: make("canvas") as HTMLCanvasElement,
  };
}

describe("render", () => {
  it("result cards carry rank, font id, distance, and best char", () => {
    const html = renderResultCards(sampleState());
    expect(html).toContain("#1");
    expect(html).toContain("alfa");
    expect(html).toContain(">0<"); // distance rendered at full precision
    expect(html).toContain("best: A");
    expect(html).toContain('src="/api/preview/bravo.png"');
    // the second card has no best_char and renders none
    const bravoCard = html.split("<article").find((c) => c.includes("bravo"));
    expect(bravoCard).toBeDefined();
    expect(bravoCard!).not.toContain("best-char");
  });

  it("escapes markup-significant characters from API data", () => {
    let s = initialState();
    s = reduce(s, {
      type: "fonts-loaded",
      fonts: [{ id: 'we<b>"&ird', preview_url: "/p.png" }],
    });
    const html = renderFontOptions(s);
    expect(html).not.toContain("<b>");
    expect(html).toContain("we&lt;b&gt;&quot;&amp;ird");
  });

  it("renders errors inline and nothing when clear", () => {
    let s = initialState();
    expect(renderError(s)).toBe("");
    s = reduce(s, { type: "query-started", seq: 1, query: { kind: "upload", fileName: "x.png" } });
    s = reduce(s, {
      type: "query-error",
      seq: 1,
      error: { status: 413, code: "payload_too_large", message: "too big" },
    });
    expect(renderError(s)).toContain("413 payload_too_large: too big");
  });

  it("renderState is idempotent on the DOM", () => {
    const state = sampleState();
    const a = makeElements();
    renderState(state, a);
    const first = {
      font: a.fontSelect.innerHTML,
      results: a.results.innerHTML,
      error: a.errorBox.innerHTML,
      k: a.kInput.value,
    };
    renderState(state, a);
    expect(a.fontSelect.innerHTML).toBe(first.font);
    expect(a.results.innerHTML).toBe(first.results);
    expect(a.errorBox.innerHTML).toBe(first.error);
    expect(a.kInput.value).toBe(first.k);
  });

  it("equal states render byte-identical DOM across fresh element sets", () => {
    const state = sampleState();
    const a = makeElements();
    const b = makeElements();
    renderState(state, a);
    renderState(state, b);
    expect(b.results.innerHTML).toBe(a.results.innerHTML);
    expect(b.fontSelect.innerHTML).toBe(a.fontSelect.innerHTML);
    expect(b.queryLabel.innerHTML).toBe(a.queryLabel.innerHTML);
  });

  it("draw commands render every font and ring the selection", () => {
    let s = sampleState();
    s = reduce(s, { type: "map-resized", width: 640, height: 480 });
    const target = 1; // bravo
    s = { ...s, selectedFont: "bravo" };
    const cmds = mapDrawCommands(s);
    const pointIds = cmds.filter((c) => c.op === "point").map((c) => c.fontId);
    expect(pointIds).toEqual(["alfa", "bravo", "charlie"]); // all fonts rendered
    const rings = cmds.filter((c) => c.op === "selected-ring");
    expect(rings).toHaveLength(1);
    expect(rings[0]!.fontId).toBe("bravo");
    const bravoPoint = cmds.filter((c) => c.op === "point")[target]!;
    expect(rings[0]!.x).toBe(bravoPoint.x);
    expect(rings[0]!.y).toBe(bravoPoint.y);
  });

  it("drawMap issues identical command streams for equal states", () => {
    const record = (): { ops: string[]; ctx: CanvasLike } => {
      const ops: string[] = [];
      const ctx: CanvasLike = {
        clearRect: (...a) => void ops.push(`clear ${a.join(",")}`),
        beginPath: () => void ops.push("begin"),
        arc: (...a) => void ops.push(`arc ${a.map((v) => v.toFixed(3)).join(",")}`),
        fill: () => void ops.push("fill"),
        stroke: () => void ops.push("stroke"),
        fillStyle: "",
        strokeStyle: "",
        lineWidth: 0,
      };
      return { ops, ctx };
    };
    const state = sampleState();
    const a = record();
    const b = record();
    drawMap(state, a.ctx);
    drawMap(state, b.ctx);
    expect(a.ops.length).toBeGreaterThan(3);
    expect(b.ops).toEqual(a.ops);
  });
});
