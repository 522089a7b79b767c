/** Effect layer: turns user intents into API calls and feeds both the
 * intents and the responses into the store as events. At most one retrieve
 * request is in flight — starting a new one aborts the previous. */

import { ApiClient, ApiError } from "./api.js";
import type { Store } from "./store.js";
import type { QueryDescriptor, RetrieveMode } from "./types.js";

function errorBody(err: unknown) {
  if (err instanceof ApiError) return err.body;
  const message = err instanceof Error ? err.message : String(err);
  return { status: 0, code: "network", message };
}

function isAbort(err: unknown): boolean {
  return err instanceof Error && err.name === "AbortError";
}

export class Controller {
  private seq = 0;
  private inflight: AbortController | null = null;
  private lastUpload: { file: Blob; fileName: string } | null = null;

  constructor(
    private readonly store: Store,
    private readonly api: ApiClient,
  ) {}

  async init(): Promise<void> {
    await Promise.all([
      this.api
        .fonts()
        .then((fonts) => this.store.dispatch({ type: "fonts-loaded", fonts }))
        .catch((err) => this.store.dispatch({ type: "load-error", error: errorBody(err) })),
      this.api
        .charset()
        .then((chars) => this.store.dispatch({ type: "charset-loaded", chars }))
        .catch((err) => this.store.dispatch({ type: "load-error", error: errorBody(err) })),
      this.api
        .map()
        .then((payload) => this.store.dispatch({ type: "map-loaded", payload }))
        .catch((err) => this.store.dispatch({ type: "load-error", error: errorBody(err) })),
    ]);
  }

  setK(k: number): void {
    this.store.dispatch({ type: "set-k", k });
    this.rerunCurrentQuery();
  }

  setMode(mode: RetrieveMode): void {
    this.store.dispatch({ type: "set-mode", mode });
    this.rerunCurrentQuery();
  }

  pickFont(fontId: string): void {
    this.store.dispatch({ type: "pick-font", fontId });
  }

  pickChar(char: string): void {
    this.store.dispatch({ type: "pick-char", char });
  }

  /** Query by referencing an indexed glyph. */
  runRefQuery(fontId: string, char: string): Promise<void> {
    const { k, mode } = this.store.state;
    return this.execute({ kind: "ref", fontId, char }, (signal) =>
      this.api.retrieveByRef(fontId, char, k, mode, signal),
    );
  }

  /** Query by uploading an image file. */
  runUpload(file: Blob, fileName: string): Promise<void> {
    this.lastUpload = { file, fileName };
    const { k, mode } = this.store.state;
    return this.execute({ kind: "upload", fileName }, (signal) =>
      this.api.retrieveByUpload(file, k, mode, signal),
    );
  }

  resizeMap(width: number, height: number): void {
    this.store.dispatch({ type: "map-resized", width, height });
  }

  panMap(dx: number, dy: number): void {
    this.store.dispatch({ type: "map-pan", dx, dy });
  }

  zoomMap(factor: number, cx: number, cy: number): void {
    this.store.dispatch({ type: "map-zoom", factor, cx, cy });
  }

  /** Click on the map: select the nearest point within reach and re-query
   * with that font's representative glyph (first charset character). */
  clickMap(x: number, y: number): Promise<void> {
    const before = this.store.state.selectedFont;
    const state = this.store.dispatch({ type: "map-click", x, y });
    const fontId = state.selectedFont;
    const char = state.chars[0];
    if (fontId === null || fontId === before || char === undefined) {
      return Promise.resolve();
    }
    return this.runRefQuery(fontId, char);
  }

  private rerunCurrentQuery(): void {
    const query = this.store.state.query;
    if (query === null) return;
    if (query.kind === "ref") {
      void this.runRefQuery(query.fontId, query.char);
    } else if (this.lastUpload !== null) {
      void this.runUpload(this.lastUpload.file, this.lastUpload.fileName);
    }
  }

  private async execute(
    query: QueryDescriptor,
    send: (signal: AbortSignal) => Promise<import("./types.js").RetrieveResult[]>,
  ): Promise<void> {
    this.inflight?.abort();
    const aborter = new AbortController();
    this.inflight = aborter;
    const seq = ++this.seq;
    this.store.dispatch({ type: "query-started", seq, query: { ...query } });
    try {
      const results = await send(aborter.signal);
      this.store.dispatch({ type: "query-results", seq, results });
    } catch (err) {
      if (isAbort(err)) return; // superseded by a newer request
      this.store.dispatch({ type: "query-error", seq, error: errorBody(err) });
    } finally {
      if (this.inflight === aborter) this.inflight = null;
    }
  }
}
