"""Input normalization shared by the estimator, CLI, and server."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .charset import CharSet, get_charset
from .dataset import GlyphDataset, load_dataset
from .errors import ShapeMismatch
from .raster import GlyphImage


def as_charset(value) -> CharSet:
    if isinstance(value, CharSet):
        return value
    return get_charset(str(value))


def as_dataset(X, charset, size: int = 64) -> GlyphDataset:
    """Accept a GlyphDataset as-is, or a filesystem root to load one from."""
    if isinstance(X, GlyphDataset):
        return X
    if isinstance(X, (str, Path)):
        return load_dataset(X, as_charset(charset), size)
    raise TypeError(f"expected GlyphDataset or path, got {type(X).__name__}")


def check_glyph_batch(X, size: int) -> np.ndarray:
    """Accept GlyphImage, list of GlyphImages, (H, W), or (N, H, W); return (N, H, W)."""
    if isinstance(X, GlyphImage):
        X = [X]
    if isinstance(X, (list, tuple)):
        if len(X) == 0:
            raise ShapeMismatch("empty glyph batch")
        X = np.stack([g.pixels if isinstance(g, GlyphImage) else np.asarray(g) for g in X])
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != size or X.shape[2] != size:
        raise ShapeMismatch(f"expected ({size}, {size}) glyph images, got array {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ShapeMismatch("glyph batch contains non-finite pixels")
    if X.min() < 0.0 or X.max() > 1.0:
        raise ShapeMismatch("glyph pixels must lie in [0, 1]")
    return X
