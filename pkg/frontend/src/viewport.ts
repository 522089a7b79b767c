/** Pure 2D viewport math for the latent map. A viewport is an invertible
 * similarity transform from world (map payload) coordinates to screen pixels:
 * screen = world * scale + t. */

export interface Point {
  x: number;
  y: number;
}

export interface Viewport {
  scale: number;
  tx: number;
  ty: number;
}

export const IDENTITY: Viewport = { scale: 1, tx: 0, ty: 0 };

export function worldToScreen(v: Viewport, p: Point): Point {
  return { x: p.x * v.scale + v.tx, y: p.y * v.scale + v.ty };
}

export function screenToWorld(v: Viewport, p: Point): Point {
  return { x: (p.x - v.tx) / v.scale, y: (p.y - v.ty) / v.scale };
}

export function pan(v: Viewport, dx: number, dy: number): Viewport {
  return { scale: v.scale, tx: v.tx + dx, ty: v.ty + dy };
}

/** Rescale by `factor` keeping the screen point (cx, cy) fixed. */
export function zoomAt(v: Viewport, factor: number, cx: number, cy: number): Viewport {
  return {
    scale: v.scale * factor,
    tx: cx - factor * (cx - v.tx),
    ty: cy - factor * (cy - v.ty),
  };
}

/** Compose two viewports: apply `inner` first, then `outer`. */
export function compose(outer: Viewport, inner: Viewport): Viewport {
  return {
    scale: outer.scale * inner.scale,
    tx: outer.scale * inner.tx + outer.tx,
    ty: outer.scale * inner.ty + outer.ty,
  };
}

/** Transform fitting the bounding box of `points` into a width x height
 * canvas with a margin, preserving aspect ratio and centering. Degenerate
 * boxes (single point, collinear-axis) fall back to a unit span. */
export function fitTransform(
  points: readonly Point[],
  width: number,
  height: number,
  margin = 24,
): Viewport {
  if (points.length === 0) return IDENTITY;
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  return { scale, tx: width / 2 - cx * scale, ty: height / 2 - cy * scale };
}

/** Index of the point whose screen position is nearest to (x, y) and within
 * `radius` pixels, or -1 when nothing is close enough (empty click). Ties go
 * to the lowest index. */
export function nearestWithin(
  screenPoints: readonly Point[],
  x: number,
  y: number,
  radius: number,
): number {
  let best = -1;
  let bestD2 = radius * radius;
  for (let i = 0; i < screenPoints.length; i++) {
    const p = screenPoints[i]!;
    const d2 = (p.x - x) ** 2 + (p.y - y) ** 2;
    if (d2 < bestD2 || (best === -1 && d2 === bestD2)) {
      best = i;
      bestD2 = d2;
    }
  }
  return best;
}
