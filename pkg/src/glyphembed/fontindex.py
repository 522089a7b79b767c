"""Font-embedding index: build, persist, query, and the 2D latent map.

The index is immutable after build and safe to share across concurrent
queries. Serving uses exhaustive scan (desk-scale font counts make that exact
and fast). Preview strips and per-glyph PNGs are written at build time so the
service never needs font files afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .charset import CharSet, charset_from_chars
from .dataset import GlyphDataset
from .errors import (
    ConfigInvalid,
    Corrupt,
    DegenerateData,
    EmptyIndex,
    ModelUnavailable,
    ShapeMismatch,
)
from .nn.checkpoint import pack_container, unpack_container
from .raster import GlyphImage, compose_on_canvas, ink_bbox, rasterize_glyph, save_glyph_png

INDEX_MAGIC = b"GIDX"
INDEX_VERSION = 1
AGGREGATIONS = ("mean", "maxpool")
PREVIEW_TEXT = "AaBb123"


@dataclass(frozen=True)
class QueryResult:
    font_id: str
    distance: float
    best_char: str | None = None

    def to_dict(self) -> dict:
        d = {"font_id": self.font_id, "distance": self.distance}
        if self.best_char is not None:
            d["best_char"] = self.best_char
        return d


class FontEmbeddingIndex:
    """Per-glyph vectors (font, char) plus one aggregate vector per font."""

    def __init__(
        self,
        font_ids: tuple[str, ...],
        charset: CharSet,
        glyph_vectors: np.ndarray,
        aggregation: str = "mean",
        checkpoint_id: str = "",
        size: int = 64,
    ):
        if aggregation not in AGGREGATIONS:
            raise ConfigInvalid(f"aggregation must be one of {AGGREGATIONS}, got {aggregation!r}")
        glyph_vectors = np.asarray(glyph_vectors, dtype=np.float32)
        if len(font_ids) == 0:
            raise EmptyIndex("index needs at least one font")
        expect = (len(font_ids), len(charset))
        if glyph_vectors.ndim != 3 or glyph_vectors.shape[:2] != expect:
            raise ShapeMismatch(f"glyph vectors {glyph_vectors.shape} do not match {expect}")
        if not np.all(np.isfinite(glyph_vectors)):
            raise ShapeMismatch("glyph vectors contain non-finite values")
        self.font_ids = tuple(font_ids)
        self.charset = charset
        self.glyph_vectors = glyph_vectors
        self.aggregation = aggregation
        self.checkpoint_id = checkpoint_id
        self.size = size
        if aggregation == "mean":
            self.aggregates = glyph_vectors.mean(axis=1)
        else:
            self.aggregates = glyph_vectors.max(axis=1)

    @property
    def feat_dim(self) -> int:
        return self.glyph_vectors.shape[2]

    @property
    def n_fonts(self) -> int:
        return len(self.font_ids)

    def font_index(self, font_id: str) -> int:
        return self.font_ids.index(font_id)


def build_index(
    model,
    dataset: GlyphDataset,
    aggregation: str = "mean",
    checkpoint_id: str = "",
    assets_dir=None,
) -> FontEmbeddingIndex:
    from .evalkit import embed_all

    table = embed_all(model, dataset)
    index = FontEmbeddingIndex(
        table.font_ids,
        dataset.charset,
        table.vectors.astype(np.float32),
        aggregation,
        checkpoint_id,
        dataset.size,
    )
    if assets_dir is not None:
        write_assets(index, dataset, assets_dir)
    return index


# --- assets -----------------------------------------------------------------


def glyph_asset_path(assets_dir, font_id: str, codepoint: int) -> Path:
    return Path(assets_dir) / "glyphs" / font_id / f"{codepoint:04x}.png"


def preview_asset_path(assets_dir, font_id: str) -> Path:
    return Path(assets_dir) / "previews" / f"{font_id}.png"


def _render_preview(dataset: GlyphDataset, font_id: str, size: int) -> np.ndarray:
    """Horizontal strip of sample glyphs, from the font file when available."""
    source = next(f for f in dataset.fonts if f.font_id == font_id)
    cells: list[np.ndarray] = []
    if source.is_file:
        for ch in PREVIEW_TEXT:
            try:
                cells.append(rasterize_glyph(source, ord(ch), size).pixels)
            except Exception:
                continue
    if not cells:
        chars = dataset.charset.chars()[:len(PREVIEW_TEXT)]
        cells = [dataset.get(font_id, ord(c)).pixels for c in chars]
    return np.concatenate(cells, axis=1)


def write_assets(index: FontEmbeddingIndex, dataset: GlyphDataset, assets_dir) -> Path:
    assets_dir = Path(assets_dir)
    for fid in index.font_ids:
        for cp in index.charset.codepoints:
            path = glyph_asset_path(assets_dir, fid, cp)
            path.parent.mkdir(parents=True, exist_ok=True)
            save_glyph_png(dataset.get(fid, cp).pixels, path)
        strip = _render_preview(dataset, fid, dataset.size)
        path = preview_asset_path(assets_dir, fid)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_glyph_png(strip, path)
    return assets_dir


# --- query ------------------------------------------------------------------


def _probe_vector(index: FontEmbeddingIndex, probe, model) -> np.ndarray:
    if isinstance(probe, GlyphImage):
        probe = probe.pixels
    probe = np.asarray(probe)
    if probe.ndim == 2:
        if model is None:
            raise ModelUnavailable("image probe requires a loaded encoder model")
        if probe.shape != (index.size, index.size):
            probe = _fit_probe_image(probe, index.size)
        return model.encode(probe[None])[0].astype(np.float64)
    vec = probe.astype(np.float64).reshape(-1)
    if vec.shape[0] != index.feat_dim:
        raise ShapeMismatch(f"probe vector has dim {vec.shape[0]}, index feat_dim {index.feat_dim}")
    return vec


def _fit_probe_image(pixels: np.ndarray, size: int) -> np.ndarray:
    """Re-canvas an arbitrary dark-on-light image to the index's glyph geometry."""
    pixels = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    box = ink_bbox(pixels)
    if box is None:
        raise ShapeMismatch("probe image has no ink")
    y0, x0, y1, x1 = box  # inclusive bounds
    ink = 1.0 - pixels[y0 : y1 + 1, x0 : x1 + 1]
    return compose_on_canvas(ink, size)


def query(
    index: FontEmbeddingIndex,
    probe,
    k: int = 5,
    mode: str = "per_glyph",
    model=None,
) -> list[QueryResult]:
    if k < 1:
        raise ConfigInvalid(f"k must be >= 1, got {k}")
    if mode not in ("per_glyph", "aggregate"):
        raise ConfigInvalid(f"mode must be per_glyph or aggregate, got {mode!r}")
    vec = _probe_vector(index, probe, model)
    chars = index.charset.chars()
    if mode == "per_glyph":
        diff = index.glyph_vectors.astype(np.float64) - vec
        dist = np.sqrt((diff * diff).sum(axis=-1))  # (F, C)
        best_char_idx = dist.argmin(axis=1)
        font_dist = dist[np.arange(dist.shape[0]), best_char_idx]
    else:
        diff = index.aggregates.astype(np.float64) - vec
        font_dist = np.sqrt((diff * diff).sum(axis=-1))
        best_char_idx = None
    order = np.argsort(font_dist, kind="stable")[: min(k, index.n_fonts)]
    results = []
    for f in order:
        best = chars[best_char_idx[f]] if best_char_idx is not None else None
        results.append(QueryResult(index.font_ids[f], float(font_dist[f]), best))
    return results


# --- 2D latent map ----------------------------------------------------------


@dataclass(frozen=True)
class MapProjection:
    font_ids: tuple[str, ...]
    coords: np.ndarray  # (n_fonts, 2)
    basis: np.ndarray  # (2, feat_dim), rows orthonormal
    explained: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "explained_variance": list(self.explained),
            "points": [
                {"font_id": fid, "x": float(x), "y": float(y)}
                for fid, (x, y) in zip(self.font_ids, self.coords)
            ],
        }


def project_2d(index: FontEmbeddingIndex) -> MapProjection:
    if index.n_fonts < 3:
        raise DegenerateData(f"2D map needs at least 3 fonts, got {index.n_fonts}")
    x = index.aggregates.astype(np.float64)
    xc = x - x.mean(axis=0, keepdims=True)
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    total = float((s * s).sum())
    if total <= 0.0:
        raise DegenerateData("aggregate embeddings have zero variance")
    basis = vt[:2].copy()
    if basis.shape[0] < 2:  # feat_dim 1: pad a zero second axis
        basis = np.vstack([basis, np.zeros_like(basis)])
    for row in basis:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    coords = xc @ basis.T
    svar = np.zeros(2)
    svar[: min(2, s.size)] = (s * s)[:2]
    explained = (float(svar[0] / total), float(svar[1] / total))
    return MapProjection(index.font_ids, coords, basis, explained)


# --- persistence ------------------------------------------------------------


def save_index(index: FontEmbeddingIndex, path) -> Path:
    path = Path(path)
    header = {
        "charset": {"id": index.charset.id, "chars": index.charset.chars()},
        "feat_dim": index.feat_dim,
        "aggregation": index.aggregation,
        "fonts": list(index.font_ids),
        "checkpoint_id": index.checkpoint_id,
        "size": index.size,
    }
    tensors = {"glyph_vectors": index.glyph_vectors}
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(pack_container(INDEX_MAGIC, INDEX_VERSION, tensors, header))
    tmp.replace(path)
    return path


def load_index(path) -> FontEmbeddingIndex:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise Corrupt(f"{path}: unreadable ({exc})") from exc
    header, tensors = unpack_container(raw, INDEX_MAGIC, INDEX_VERSION, path)
    try:
        charset = charset_from_chars(header["charset"]["id"], "".join(header["charset"]["chars"]))
        index = FontEmbeddingIndex(
            tuple(header["fonts"]),
            charset,
            tensors["glyph_vectors"],
            header["aggregation"],
            header.get("checkpoint_id", ""),
            header.get("size", 64),
        )
    except KeyError as exc:
        raise Corrupt(f"{path}: header missing field {exc}") from exc
    if index.feat_dim != header.get("feat_dim"):
        raise Corrupt(f"{path}: feat_dim header/payload mismatch")
    return index
