import { describe, expect, it } from "vitest";

import { ApiClient, type FetchFn } from "../src/api.js";
import { Controller } from "../src/controller.js";
import { Store, replay, screenPoints } from "../src/store.js";
import { mapDrawCommands, renderResultCards } from "../src/render.js";
import type { MapPayload, RetrieveResult } from "../src/types.js";

const FONT_IDS = ["alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"];

const MAP: MapPayload = {
  explained_variance: [0.6, 0.3],
  points: FONT_IDS.map((id, i) => ({
    font_id: id,
    x: Math.cos((2 * Math.PI * i) / FONT_IDS.length),
    y: Math.sin((2 * Math.PI * i) / FONT_IDS.length),
  })),
};

/** Deterministic ranking: the probe's own font first at distance 0, then the
 * rest in a rotation — a stand-in obeying the API determinism contract. */
function ranking(fontId: string, k: number): RetrieveResult[] {
  const start = Math.max(0, FONT_IDS.indexOf(fontId));
  const ordered = [...FONT_IDS.slice(start), ...FONT_IDS.slice(0, start)];
  return ordered.slice(0, k).map((id, rank) => ({
    font_id: id,
    distance: rank === 0 ? 0 : rank / 10,
    best_char: "A",
    preview_url: `/api/preview/${id}.png`,
  }));
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

interface Recorded {
  url: string;
  init?: RequestInit;
}

/** Mocked transport. `hold` makes retrieve responses wait until release(). */
function makeTransport(opts: { failUploads?: boolean; hold?: boolean } = {}) {
  const calls: Recorded[] = [];
  let pending: (() => void)[] = [];
  const release = () => {
    for (const fn of pending.splice(0)) fn();
  };

  const fetchFn: FetchFn = async (url, init) => {
    calls.push({ url, init });
    const u = new URL(url, "http://testhost");
    if (u.pathname === "/api/fonts") {
      return jsonResponse(200, {
        fonts: FONT_IDS.map((id) => ({ id, preview_url: `/api/preview/${id}.png` })),
      });
    }
    if (u.pathname === "/api/charset") {
      return jsonResponse(200, { id: "A-Z", chars: ["A", "B", "C"] });
    }
    if (u.pathname === "/api/map") {
      return jsonResponse(200, MAP);
    }
    if (u.pathname === "/api/retrieve") {
      if (opts.hold) {
        await new Promise<void>((res) => pending.push(res));
      }
      if (init?.signal?.aborted) {
        throw new DOMException("The operation was aborted.", "AbortError");
      }
      const k = Number(u.searchParams.get("k") ?? "10");
      const body = init?.body;
      if (typeof body === "string") {
        const payload = JSON.parse(body) as { font_id: string; char: string };
        if (payload.char !== "A" && payload.char !== "B" && payload.char !== "C") {
          return jsonResponse(404, {
            status: 404,
            code: "not_found",
            message: `char ${payload.char} not in index charset`,
          });
        }
        return jsonResponse(200, { results: ranking(payload.font_id, k) });
      }
      if (opts.failUploads) {
        return jsonResponse(400, {
          status: 400,
          code: "bad_request",
          message: "cannot decode image",
        });
      }
      return jsonResponse(200, { results: ranking("alfa", k) });
    }
    return jsonResponse(404, { status: 404, code: "not_found", message: `no route ${u.pathname}` });
  };

  return { fetchFn, calls, release };
}

function makeApp(opts: Parameters<typeof makeTransport>[0] = {}) {
  const transport = makeTransport(opts);
  const store = new Store();
  const controller = new Controller(store, new ApiClient(transport.fetchFn));
  return { ...transport, store, controller };
}

describe("controller", () => {
  it("init loads fonts, charset, and map", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    expect(store.state.fonts.map((f) => f.id)).toEqual(FONT_IDS);
    expect(store.state.chars).toEqual(["A", "B", "C"]);
    expect(store.state.map).toEqual(MAP);
    expect(store.state.error).toBeNull();
  });

  it("self-retrieval puts the picked font first at distance 0", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    controller.setK(5);
    await controller.runRefQuery("charlie", "A");
    expect(store.state.results).toHaveLength(5);
    expect(store.state.results[0]).toMatchObject({ font_id: "charlie", distance: 0 });
  });

  it("increasing k keeps the first results a stable prefix", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    controller.setK(5);
    await controller.runRefQuery("bravo", "B");
    const firstFive = store.state.results.map((r) => r.font_id);
    expect(firstFive).toHaveLength(5);
    controller.setK(10);
    await Promise.resolve(); // let the automatic re-query settle
    await new Promise((res) => setTimeout(res, 0));
    expect(store.state.results).toHaveLength(8); // all fonts; index smaller than k
    expect(store.state.results.slice(0, 5).map((r) => r.font_id)).toEqual(firstFive);
  });

  it("failed uploads surface the ApiError inline and retain prior results", async () => {
    const { store, controller } = makeApp({ failUploads: true });
    await controller.init();
    await controller.runRefQuery("alfa", "A");
    const prior = store.state.results;
    expect(prior.length).toBeGreaterThan(0);
    await controller.runUpload(new Blob([new Uint8Array([1, 2, 3])]), "broken.png");
    expect(store.state.error).toMatchObject({ status: 400, code: "bad_request" });
    expect(store.state.results).toEqual(prior);
  });

  it("a newer query aborts the in-flight one and wins", async () => {
    const { store, controller, calls, release } = makeApp({ hold: true });
    await controller.init();
    const first = controller.runRefQuery("alfa", "A");
    const second = controller.runRefQuery("bravo", "A");
    release();
    await Promise.all([first, second]);
    const retrieves = calls.filter((c) => c.url.includes("/api/retrieve"));
    expect(retrieves).toHaveLength(2);
    expect(retrieves[0]!.init?.signal?.aborted).toBe(true);
    expect(retrieves[1]!.init?.signal?.aborted).toBe(false);
    expect(store.state.results[0]).toMatchObject({ font_id: "bravo", distance: 0 });
    expect(store.state.error).toBeNull();
    expect(store.state.query).toEqual({ kind: "ref", fontId: "bravo", char: "A" });
  });

  it("clicking a map point selects that font and re-queries it", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    controller.resizeMap(640, 480);
    const idx = FONT_IDS.indexOf("echo");
    const target = screenPoints(store.state)[idx]!;
    await controller.clickMap(target.x + 2, target.y - 1);
    expect(store.state.selectedFont).toBe("echo");
    expect(store.state.query).toEqual({ kind: "ref", fontId: "echo", char: "A" });
    expect(store.state.results[0]).toMatchObject({ font_id: "echo", distance: 0 });
  });

  it("clicking empty space is a no-op", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    controller.resizeMap(640, 480);
    const before = store.state;
    await controller.clickMap(1, 1);
    expect(store.state).toEqual(before);
    expect(store.state.query).toBeNull();
  });

  it("replaying the recorded log reproduces state and rendered output", async () => {
    const { store, controller } = makeApp();
    await controller.init();
    controller.resizeMap(800, 600);
    controller.setK(4);
    await controller.runRefQuery("delta", "B");
    const target = screenPoints(store.state)[0]!;
    await controller.clickMap(target.x, target.y);
    controller.panMap(15, -20);
    controller.zoomMap(1.5, 400, 300);

    const replayed = replay(store.log);
    expect(replayed).toEqual(store.state);
    expect(renderResultCards(replayed)).toEqual(renderResultCards(store.state));
    expect(mapDrawCommands(replayed)).toEqual(mapDrawCommands(store.state));
  });
});
