"""Random-resized-crop augmentation for glyph images."""

from __future__ import annotations

import math

import numpy as np

from .raster import GlyphImage

DEFAULT_SCALE = (0.8, 1.0)
DEFAULT_ASPECT = (0.9, 1.1)


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Align-corners bilinear resize; exact identity when sizes match."""
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.linspace(0.0, h - 1.0, out_h)
    xs = np.linspace(0.0, w - 1.0, out_w)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[y0][:, x0] * (1 - wx) + img[y0][:, x1] * wx
    bot = img[y1][:, x0] * (1 - wx) + img[y1][:, x1] * wx
    return (top * (1 - wy) + bot * wy).astype(img.dtype)


def random_resized_crop(
    g,
    rng: np.random.Generator,
    scale_range: tuple[float, float] = DEFAULT_SCALE,
    aspect_range: tuple[float, float] = DEFAULT_ASPECT,
):
    """Crop a random sub-rectangle (area fraction in scale_range, aspect ratio in
    aspect_range) and resize it back to the original size with bilinear interpolation.

    Accepts a GlyphImage (returns one) or a bare 2D array (returns an array)."""
    if not isinstance(g, GlyphImage):
        out = random_resized_crop(GlyphImage("", 0, np.asarray(g)), rng, scale_range, aspect_range)
        return out.pixels
    h, w = g.pixels.shape
    s = rng.uniform(*scale_range)
    a = rng.uniform(*aspect_range)
    area = s * h * w
    cw = int(round(math.sqrt(area * a)))
    ch = int(round(math.sqrt(area / a)))
    cw = min(max(cw, 1), w)
    ch = min(max(ch, 1), h)
    x0 = int(rng.integers(0, w - cw + 1))
    y0 = int(rng.integers(0, h - ch + 1))
    crop = g.pixels[y0 : y0 + ch, x0 : x0 + cw]
    out = np.clip(bilinear_resize(crop, h, w), 0.0, 1.0)
    return GlyphImage(g.font_id, g.codepoint, out.astype(np.float32))
