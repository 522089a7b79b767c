/** Browser bootstrap: wire DOM events to the controller and re-render on
 * every state change. */

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { renderState, type ViewElements } from "./render.js";
import { Store } from "./store.js";

function grab<T extends Element>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as unknown as T;
}

export function boot(): void {
  const store = new Store();
  const controller = new Controller(store, new ApiClient());

  const els: ViewElements = {
    fontSelect: grab<HTMLSelectElement>("font-select"),
    charSelect: grab<HTMLSelectElement>("char-select"),
    results: grab<HTMLElement>("results"),
    queryLabel: grab<HTMLElement>("query-label"),
    errorBox: grab<HTMLElement>("error-box"),
    kInput: grab<HTMLInputElement>("k-input"),
    canvas: grab<HTMLCanvasElement>("map-canvas"),
  };

  store.subscribe((state) => renderState(state, els));

  grab<HTMLButtonElement>("run-query").addEventListener("click", () => {
    const fontId = els.fontSelect.value;
    const char = els.charSelect.value;
    if (fontId && char) void controller.runRefQuery(fontId, char);
  });

  els.kInput.addEventListener("change", () => {
    const k = Number(els.kInput.value);
    if (Number.isFinite(k)) controller.setK(k);
  });

  grab<HTMLSelectElement>("mode-select").addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    controller.setMode(value === "aggregate" ? "aggregate" : "per_glyph");
  });

  grab<HTMLInputElement>("upload-input").addEventListener("change", (ev) => {
    const input = ev.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) void controller.runUpload(file, file.name);
  });

  const canvas = els.canvas;
  let dragging = false;
  let moved = false;
  let lastX = 0;
  let lastY = 0;

  canvas.addEventListener("mousedown", (ev) => {
    dragging = true;
    moved = false;
    lastX = ev.offsetX;
    lastY = ev.offsetY;
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (!dragging) return;
    const dx = ev.offsetX - lastX;
    const dy = ev.offsetY - lastY;
    if (Math.abs(dx) + Math.abs(dy) > 0) {
      moved = true;
      controller.panMap(dx, dy);
      lastX = ev.offsetX;
      lastY = ev.offsetY;
    }
  });
  canvas.addEventListener("mouseup", (ev) => {
    dragging = false;
    if (!moved) void controller.clickMap(ev.offsetX, ev.offsetY);
  });
  canvas.addEventListener("mouseleave", () => {
    dragging = false;
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.2 : 1 / 1.2;
    controller.zoomMap(factor, ev.offsetX, ev.offsetY);
  });

  const sizeToParent = () => {
    const rect = canvas.parentElement?.getBoundingClientRect();
    if (rect && rect.width > 0) {
      controller.resizeMap(Math.floor(rect.width), Math.max(320, Math.floor(rect.height)));
    }
  };
  window.addEventListener("resize", sizeToParent);
  sizeToParent();

  void controller.init();
}

boot();
