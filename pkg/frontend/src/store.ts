/** Application state and its reducer.
 *
 * UI state is a pure function of the event log: user actions and API
 * responses both enter as events, so replaying a recorded log through
 * `reduce` rebuilds the exact same state without any network access.
 * Effects (actual HTTP calls) live in the controller, never here.
 */

import type {
  ApiErrorBody,
  FontEntry,
  MapPayload,
  QueryDescriptor,
  RetrieveMode,
  RetrieveResult,
} from "./types.js";
import {
  IDENTITY,
  type Viewport,
  compose,
  fitTransform,
  nearestWithin,
  pan,
  worldToScreen,
  zoomAt,
} from "./viewport.js";

export const MIN_K = 1;
export const MAX_K = 50;
export const CLICK_RADIUS_PX = 10;

export type AppEvent =
  | { type: "fonts-loaded"; fonts: FontEntry[] }
  | { type: "charset-loaded"; chars: string[] }
  | { type: "map-loaded"; payload: MapPayload }
  | { type: "load-error"; error: ApiErrorBody }
  | { type: "set-k"; k: number }
  | { type: "set-mode"; mode: RetrieveMode }
  | { type: "pick-font"; fontId: string }
  | { type: "pick-char"; char: string }
  | { type: "query-started"; seq: number; query: QueryDescriptor }
  | { type: "query-results"; seq: number; results: RetrieveResult[] }
  | { type: "query-error"; seq: number; error: ApiErrorBody }
  | { type: "map-resized"; width: number; height: number }
  | { type: "map-pan"; dx: number; dy: number }
  | { type: "map-zoom"; factor: number; cx: number; cy: number }
  | { type: "map-click"; x: number; y: number };

export interface AppState {
  fonts: FontEntry[];
  chars: string[];
  map: MapPayload | null;
  mapSize: { width: number; height: number };
  /** User pan/zoom on top of the fit-to-canvas transform. */
  userView: Viewport;
  selectedFont: string | null;
  pickedFont: string | null;
  pickedChar: string | null;
  k: number;
  mode: RetrieveMode;
  query: QueryDescriptor | null;
  /** Sequence number of the in-flight query; answered events with a stale
   * seq are ignored, which makes "latest request wins" a pure decision. */
  inflightSeq: number | null;
  results: RetrieveResult[];
  error: ApiErrorBody | null;
}

export function initialState(): AppState {
  return {
    fonts: [],
    chars: [],
    map: null,
    mapSize: { width: 640, height: 480 },
    userView: IDENTITY,
    selectedFont: null,
    pickedFont: null,
    pickedChar: null,
    k: 10,
    mode: "per_glyph",
    query: null,
    inflightSeq: null,
    results: [],
    error: null,
  };
}

export function clampK(k: number): number {
  return Math.min(MAX_K, Math.max(MIN_K, Math.round(k)));
}

/** World -> screen transform currently in effect (fit, then user view). */
export function effectiveView(state: AppState): Viewport {
  const points = state.map?.points ?? [];
  const fit = fitTransform(points, state.mapSize.width, state.mapSize.height);
  return compose(state.userView, fit);
}

/** Screen-space positions of the map points under the current view. */
export function screenPoints(state: AppState): { x: number; y: number }[] {
  const view = effectiveView(state);
  return (state.map?.points ?? []).map((p) => worldToScreen(view, p));
}

/** Font id hit by a click at screen (x, y), or null for an empty click. */
export function hitTest(state: AppState, x: number, y: number): string | null {
  const idx = nearestWithin(screenPoints(state), x, y, CLICK_RADIUS_PX);
  return idx === -1 ? null : (state.map?.points[idx]?.font_id ?? null);
}

export function reduce(state: AppState, event: AppEvent): AppState {
  switch (event.type) {
    case "fonts-loaded":
      return { ...state, fonts: event.fonts };
    case "charset-loaded":
      return { ...state, chars: event.chars };
    case "map-loaded":
      return { ...state, map: event.payload, userView: IDENTITY };
    case "load-error":
      return { ...state, error: event.error };
    case "set-k":
      return { ...state, k: clampK(event.k) };
    case "set-mode":
      return { ...state, mode: event.mode };
    case "pick-font":
      return { ...state, pickedFont: event.fontId };
    case "pick-char":
      return { ...state, pickedChar: event.char };
    case "query-started":
      return { ...state, query: event.query, inflightSeq: event.seq, error: null };
    case "query-results":
      if (event.seq !== state.inflightSeq) return state;
      return { ...state, results: event.results, inflightSeq: null };
    case "query-error":
      // Prior results are retained; the error is shown inline.
      if (event.seq !== state.inflightSeq) return state;
      return { ...state, error: event.error, inflightSeq: null };
    case "map-resized":
      return { ...state, mapSize: { width: event.width, height: event.height } };
    case "map-pan":
      return { ...state, userView: pan(state.userView, event.dx, event.dy) };
    case "map-zoom":
      return { ...state, userView: zoomAt(state.userView, event.factor, event.cx, event.cy) };
    case "map-click": {
      const fontId = hitTest(state, event.x, event.y);
      if (fontId === null) return state; // empty click is a no-op
      return { ...state, selectedFont: fontId };
    }
  }
}

export function replay(log: readonly AppEvent[]): AppState {
  return log.reduce(reduce, initialState());
}

/** Holds the current state and the replayable event log. */
export class Store {
  private current = initialState();
  private readonly events: AppEvent[] = [];
  private readonly listeners = new Set<(s: AppState) => void>();

  get state(): AppState {
    return this.current;
  }

  get log(): readonly AppEvent[] {
    return this.events;
  }

  dispatch(event: AppEvent): AppState {
    this.events.push(event);
    this.current = reduce(this.current, event);
    for (const fn of this.listeners) fn(this.current);
    return this.current;
  }

  subscribe(fn: (s: AppState) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}
