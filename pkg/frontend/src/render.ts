/** Pure rendering: state in, HTML strings / draw commands out. Keeping this
 * side-effect free is what makes "replaying a log reproduces the rendered
 * state" testable by direct comparison. */

import type { AppState } from "./store.js";
import { screenPoints } from "./store.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderFontOptions(state: AppState): string {
  const opts = state.fonts.map(
    (f) =>
      `<option value="${esc(f.id)}"${f.id === state.pickedFont ? " selected" : ""}>${esc(f.id)}</option>`,
  );
  return opts.join("");
}

export function renderCharOptions(state: AppState): string {
  const opts = state.chars.map(
    (c) =>
      `<option value="${esc(c)}"${c === state.pickedChar ? " selected" : ""}>${esc(c)}</option>`,
  );
  return opts.join("");
}

export function renderError(state: AppState): string {
  if (state.error === null) return "";
  const { status, code, message } = state.error;
  return `<div class="error" role="alert">${status} ${esc(code)}: ${esc(message)}</div>`;
}

export function renderQueryLabel(state: AppState): string {
  const q = state.query;
  if (q === null) return "no query yet";
  if (q.kind === "ref") return `glyph ${esc(q.char)} of ${esc(q.fontId)}`;
  return `upload ${esc(q.fileName)}`;
}

export function renderResultCards(state: AppState): string {
  const cards = state.results.map((r, rank) => {
    const best =
      r.best_char !== undefined ? `<span class="best-char">best: ${esc(r.best_char)}</span>` : "";
    return (
      `<article class="card" data-font="${esc(r.font_id)}">` +
      `<img src="${esc(r.preview_url)}" alt="preview of ${esc(r.font_id)}">` +
      `<div class="card-meta">` +
      `<span class="rank">#${rank + 1}</span>` +
      `<span class="font-id">${esc(r.font_id)}</span>` +
      `<span class="distance">${r.distance}</span>` +
      best +
      `</div></article>`
    );
  });
  return cards.join("");
}

export interface DrawCommand {
  op: "clear" | "point" | "selected-ring";
  x?: number;
  y?: number;
  fontId?: string;
}

/** Draw list for the map canvas under the current viewport. */
export function mapDrawCommands(state: AppState): DrawCommand[] {
  const cmds: DrawCommand[] = [{ op: "clear" }];
  const pts = screenPoints(state);
  const points = state.map?.points ?? [];
  for (let i = 0; i < pts.length; i++) {
    const p = pts[i]!;
    const fontId = points[i]!.font_id;
    cmds.push({ op: "point", x: p.x, y: p.y, fontId });
    if (fontId === state.selectedFont) {
      cmds.push({ op: "selected-ring", x: p.x, y: p.y, fontId });
    }
  }
  return cmds;
}

export interface CanvasLike {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
}

export function drawMap(state: AppState, ctx: CanvasLike): void {
  const { width, height } = state.mapSize;
  for (const cmd of mapDrawCommands(state)) {
    if (cmd.op === "clear") {
      ctx.clearRect(0, 0, width, height);
    } else if (cmd.op === "point") {
      ctx.fillStyle = "#4a7dba";
      ctx.beginPath();
      ctx.arc(cmd.x!, cmd.y!, 4, 0, 2 * Math.PI);
      ctx.fill();
    } else {
      ctx.strokeStyle = "#d94f30";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(cmd.x!, cmd.y!, 8, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}

export interface ViewElements {
  fontSelect: HTMLSelectElement;
  charSelect: HTMLSelectElement;
  results: HTMLElement;
  queryLabel: HTMLElement;
  errorBox: HTMLElement;
  kInput: HTMLInputElement;
  canvas: HTMLCanvasElement;
}

/** Idempotent DOM sync: rendering the same state twice leaves the DOM
 * byte-identical. */
export function renderState(state: AppState, els: ViewElements): void {
  els.fontSelect.innerHTML = renderFontOptions(state);
  els.charSelect.innerHTML = renderCharOptions(state);
  els.results.innerHTML = renderResultCards(state);
  els.queryLabel.innerHTML = renderQueryLabel(state);
  els.errorBox.innerHTML = renderError(state);
  if (els.kInput.value !== String(state.k)) els.kInput.value = String(state.k);
  if (els.canvas.width !== state.mapSize.width) els.canvas.width = state.mapSize.width;
  if (els.canvas.height !== state.mapSize.height) els.canvas.height = state.mapSize.height;
  const ctx = els.canvas.getContext("2d");
  if (ctx !== null) drawMap(state, ctx as unknown as CanvasLike);
}
