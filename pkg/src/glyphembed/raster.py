"""Rasterize vector font glyphs to fixed-size grayscale images.

Rendering convention: dark ink on a white background, pixel values in [0, 1]
with 1.0 = background. The glyph's tight ink bounding box is uniformly scaled
so its longer side spans 0.8x the canvas, then centered by bounding-box
midpoint. Identical inputs produce bit-identical output.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageFont
from fontTools.ttLib import TTFont

from .errors import BlankGlyph, MissingGlyph, UnreadableFont

# Padding fraction: the longer bbox axis occupies this fraction of the canvas.
OCCUPANCY = 0.8
# Fonts are rendered at this multiple of the target size before downscaling,
# so anti-aliasing quality does not depend on the em size of the face.
OVERSAMPLE = 4

FONT_SUFFIXES = (".ttf", ".otf")


@dataclass(frozen=True)
class FontSource:
    """A font usable as a glyph source: a vector font file, a pre-rendered PNG
    directory, or None for purely in-memory datasets."""

    font_id: str
    origin: Path | None

    @property
    def is_file(self) -> bool:
        return self.origin is not None and self.origin.suffix.lower() in FONT_SUFFIXES

    def __post_init__(self):
        if self.origin is not None:
            object.__setattr__(self, "origin", Path(self.origin))


@dataclass
class GlyphImage:
    """One rasterized character in one font."""

    font_id: str
    codepoint: int
    pixels: np.ndarray  # (size, size) float32 in [0, 1], 1.0 = white background

    @property
    def size(self) -> int:
        return self.pixels.shape[0]

    @property
    def char(self) -> str:
        return chr(self.codepoint)

    def validate(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.shape[0] != self.pixels.shape[1]:
            raise ValueError(f"glyph pixels must be square, got {self.pixels.shape}")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("glyph pixels out of [0, 1]")


@functools.lru_cache(maxsize=256)
def _load_face(path_str: str, render_size: int):
    """Load a font face once per (path, pixel size): PIL font plus its unicode coverage."""
    try:
        tt = TTFont(path_str, lazy=True)
        cmap = tt.getBestCmap()
        coverage = frozenset(cmap.keys())
        tt.close()
    except Exception as exc:  # fontTools raises a mix of error types on bad files
        raise UnreadableFont(f"cannot parse font file {path_str}: {exc}") from exc
    try:
        pil_font = ImageFont.truetype(path_str, render_size)
    except OSError as exc:
        raise UnreadableFont(f"cannot open font file {path_str}: {exc}") from exc
    return pil_font, coverage


def rasterize_glyph(source: FontSource, codepoint: int, size: int = 64) -> GlyphImage:
    """Render one codepoint of a vector font to a size x size GlyphImage.

    Raises MissingGlyph if the font's cmap lacks the codepoint, UnreadableFont
    on parse failure, and BlankGlyph when the outline produces no ink.
    """
    if not source.is_file:
        raise UnreadableFont(f"{source.origin} is not a vector font file")
    pil_font, coverage = _load_face(str(source.origin), size * OVERSAMPLE)
    if codepoint not in coverage:
        raise MissingGlyph(f"font {source.font_id} has no glyph for U+{codepoint:04X}")

    mask = pil_font.getmask(chr(codepoint), mode="L")
    w, h = mask.size
    if w == 0 or h == 0:
        raise BlankGlyph(f"U+{codepoint:04X} renders empty in {source.font_id}")
    ink = np.asarray(mask, dtype=np.uint8).reshape(h, w)
    ys, xs = np.nonzero(ink)
    if ys.size == 0:
        raise BlankGlyph(f"U+{codepoint:04X} renders blank in {source.font_id}")

    tight = ink[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    pixels = compose_on_canvas(tight, size)
    if pixels.min() >= 0.5:
        raise BlankGlyph(f"U+{codepoint:04X} too faint after scaling in {source.font_id}")
    return GlyphImage(source.font_id, codepoint, pixels)


def compose_on_canvas(tight_ink: np.ndarray, size: int) -> np.ndarray:
    """Scale a tight ink bitmap to OCCUPANCY coverage and center it on a white canvas.

    Accepts uint8 ink (0..255) or float ink in [0, 1]; float input is
    quantized to 8 bits so both paths share one resampling pipeline.
    """
    tight_ink = np.asarray(tight_ink)
    if tight_ink.dtype != np.uint8:
        tight_ink = np.clip(np.rint(tight_ink.astype(np.float64) * 255.0), 0, 255).astype(np.uint8)
    th, tw = tight_ink.shape
    target = max(1, round(OCCUPANCY * size))
    if tw >= th:
        nw = target
        nh = max(1, round(th * target / tw))
    else:
        nh = target
        nw = max(1, round(tw * target / th))
    scaled = Image.fromarray(tight_ink).resize((nw, nh), Image.Resampling.BOX)
    scaled = np.asarray(scaled, dtype=np.float32) / 255.0

    canvas = np.zeros((size, size), dtype=np.float32)
    y0 = (size - nh) // 2
    x0 = (size - nw) // 2
    canvas[y0 : y0 + nh, x0 : x0 + nw] = scaled
    return np.clip(1.0 - canvas, 0.0, 1.0).astype(np.float32)


def ink_bbox(pixels: np.ndarray, threshold: float = 1.0) -> tuple[int, int, int, int] | None:
    """(y0, x0, y1, x1) inclusive bounds of pixels darker than threshold, or None."""
    ys, xs = np.nonzero(pixels < threshold)
    if ys.size == 0:
        return None
    return int(ys.min()), int(xs.min()), int(ys.max()), int(xs.max())


def glyph_filename(codepoint: int) -> str:
    """Pre-rendered layout filename for a codepoint: 4-digit lowercase hex + .png."""
    return f"{codepoint:04x}.png"


def load_glyph_png(path: Path, font_id: str, codepoint: int, size: int) -> GlyphImage:
    """Read a pre-rendered 8-bit grayscale glyph PNG, rescaling if sizes differ."""
    try:
        img = Image.open(path).convert("L")
    except OSError as exc:
        raise UnreadableFont(f"cannot read {path}: {exc}") from exc
    if img.size != (size, size):
        img = img.resize((size, size), Image.Resampling.BOX)
    pixels = np.asarray(img, dtype=np.float32) / 255.0
    return GlyphImage(font_id, codepoint, pixels)


def save_glyph_png(glyph, path: Path) -> None:
    """Write a glyph (GlyphImage or [0,1] grayscale array) as an 8-bit PNG."""
    pixels = glyph.pixels if isinstance(glyph, GlyphImage) else np.asarray(glyph)
    arr = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, "L").save(path)
