"""Glyph image corpora: loading, deterministic splits, and minibatch sampling.

A dataset is complete by construction: every retained font has an image for
every charset codepoint. Fonts missing any glyph are excluded at load time
and reported, never padded.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .charset import CharSet
from .errors import (
    BlankGlyph,
    DatasetTooSmall,
    EmptyDataset,
    InvalidSplit,
    MissingGlyph,
    MixedLayout,
    UnreadableFont,
)
from .raster import (
    FONT_SUFFIXES,
    FontSource,
    GlyphImage,
    glyph_filename,
    load_glyph_png,
    rasterize_glyph,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Exclusion:
    font_id: str
    codepoint: int | None
    reason: str


@dataclass
class GlyphDataset:
    charset: CharSet
    fonts: list[FontSource]
    images: dict[tuple[str, int], GlyphImage]
    size: int
    exclusions: list[Exclusion] = field(default_factory=list)

    @property
    def font_ids(self) -> list[str]:
        return [f.font_id for f in self.fonts]

    def __len__(self) -> int:
        return len(self.images)

    def get(self, font_id: str, codepoint: int) -> GlyphImage:
        return self.images[(font_id, codepoint)]

    def validate(self) -> None:
        expect = len(self.fonts) * len(self.charset)
        if len(self.images) != expect:
            raise ValueError(f"incomplete dataset: {len(self.images)} images, expected {expect}")
        for f in self.fonts:
            for cp in self.charset.codepoints:
                if (f.font_id, cp) not in self.images:
                    raise ValueError(f"missing image ({f.font_id}, U+{cp:04X})")

    def manifest(self) -> dict:
        return {
            "charset": self.charset.id,
            "size": self.size,
            "font_ids": self.font_ids,
            "exclusions": [
                {"font_id": e.font_id, "codepoint": e.codepoint, "reason": e.reason}
                for e in self.exclusions
            ],
        }


@dataclass(frozen=True)
class SplitSpec:
    seed: int
    n_val_fonts: int


@dataclass(frozen=True)
class MinibatchEntry:
    font_id: str
    codepoint_1: int
    codepoint_2: int


@dataclass
class MinibatchDraw:
    """N fonts x 2 glyphs in fixed interleaved order: f1c1, f1c2, f2c1, f2c2, ..."""

    entries: list[MinibatchEntry]
    images: list[GlyphImage]

    @property
    def n_fonts(self) -> int:
        return len(self.entries)

    def image_array(self, dtype=np.float32) -> np.ndarray:
        return np.stack([g.pixels for g in self.images]).astype(dtype)


def _scan_sources(root: Path) -> list[FontSource]:
    """Find font files and pre-rendered glyph directories under root."""
    file_ids: dict[str, Path] = {}
    dir_ids: dict[str, Path] = {}
    for entry in sorted(root.iterdir()):
        if entry.is_file() and entry.suffix.lower() in FONT_SUFFIXES:
            file_ids[entry.stem] = entry
        elif entry.is_dir() and any(entry.glob("*.png")):
            dir_ids[entry.name] = entry
    clash = sorted(set(file_ids) & set(dir_ids))
    if clash:
        raise MixedLayout(f"font ids present as both files and image dirs: {clash}")
    merged = {**file_ids, **dir_ids}
    return [FontSource(fid, merged[fid]) for fid in sorted(merged)]


def _load_font(source: FontSource, charset: CharSet, size: int) -> dict[tuple[str, int], GlyphImage]:
    images = {}
    for cp in charset.codepoints:
        if source.is_file:
            images[(source.font_id, cp)] = rasterize_glyph(source, cp, size)
        else:
            path = source.origin / glyph_filename(cp)
            if not path.exists():
                raise MissingGlyph(f"{source.font_id} lacks {glyph_filename(cp)}")
            img = load_glyph_png(path, source.font_id, cp, size)
            if img.pixels.min() >= 0.5:
                raise BlankGlyph(f"{source.font_id}/{glyph_filename(cp)} is blank")
            images[(source.font_id, cp)] = img
    return images


def load_dataset(root: str | Path, charset: CharSet, size: int = 64) -> GlyphDataset:
    """Build a complete GlyphDataset from a directory of fonts or PNG trees.

    Fonts with any missing, unreadable, or blank glyph are excluded and
    recorded in the returned dataset's exclusion list.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"{root} is not a directory")
    sources = _scan_sources(root)

    fonts: list[FontSource] = []
    images: dict[tuple[str, int], GlyphImage] = {}
    exclusions: list[Exclusion] = []
    for source in sources:
        try:
            font_images = _load_font(source, charset, size)
        except (MissingGlyph, BlankGlyph, UnreadableFont) as exc:
            cp = _codepoint_of(exc)
            exclusions.append(Exclusion(source.font_id, cp, f"{type(exc).__name__}: {exc}"))
            log.warning("excluding font %s: %s", source.font_id, exc)
            continue
        fonts.append(source)
        images.update(font_images)

    if not fonts:
        raise EmptyDataset(f"no usable fonts under {root}")
    ds = GlyphDataset(charset, fonts, images, size, exclusions)
    ds.validate()
    return ds


def render_dataset(fonts_dir: str | Path, out_dir: Path, charset: CharSet, size: int = 64) -> GlyphDataset:
    """Rasterize every usable font file under fonts_dir into the PNG layout
    (out_dir/<font_id>/<hex>.png) and write a manifest.json alongside."""
    from .raster import save_glyph_png

    fonts_dir = Path(fonts_dir)
    if not fonts_dir.is_dir():
        raise EmptyDataset(f"{fonts_dir} is not a directory")
    # Sort by font id (stem) so ordering matches a later load_dataset reload.
    sources = [
        FontSource(path.stem, path)
        for path in sorted(fonts_dir.iterdir(), key=lambda p: p.stem)
        if path.is_file() and path.suffix.lower() in FONT_SUFFIXES
    ]
    fonts: list[FontSource] = []
    images: dict[tuple[str, int], GlyphImage] = {}
    exclusions: list[Exclusion] = []
    for source in sources:
        try:
            font_images = _load_font(source, charset, size)
        except (MissingGlyph, BlankGlyph, UnreadableFont) as exc:
            exclusions.append(Exclusion(source.font_id, _codepoint_of(exc), f"{type(exc).__name__}: {exc}"))
            log.warning("excluding font %s: %s", source.font_id, exc)
            continue
        out_dir.joinpath(source.font_id).mkdir(parents=True, exist_ok=True)
        for (fid, cp), img in font_images.items():
            save_glyph_png(img, out_dir / fid / glyph_filename(cp))
            # Keep the 8-bit quantized pixels so the returned dataset is
            # bit-identical to a later load_dataset of the written tree.
            q = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
            images[(fid, cp)] = GlyphImage(fid, cp, q.astype(np.float32) / 255.0)
        fonts.append(FontSource(source.font_id, out_dir / source.font_id))
    if not fonts:
        raise EmptyDataset(f"no usable fonts under {fonts_dir}")
    ds = GlyphDataset(charset, fonts, images, size, exclusions)
    ds.validate()
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(ds.manifest(), indent=2))
    return ds


def _codepoint_of(exc: Exception) -> int | None:
    import re

    m = re.search(r"U\+([0-9A-Fa-f]{4,6})", str(exc)) or re.search(r"([0-9a-f]{4})\.png", str(exc))
    return int(m.group(1), 16) if m else None


def split_fonts(dataset: GlyphDataset, spec: SplitSpec) -> tuple[GlyphDataset, GlyphDataset]:
    """Deterministically partition fonts into train/val sets.

    The partition is a pure function of (sorted font ids, seed).
    """
    n = len(dataset.fonts)
    if not 0 < spec.n_val_fonts < n:
        raise InvalidSplit(f"n_val_fonts={spec.n_val_fonts} invalid for {n} fonts")
    ids = sorted(dataset.font_ids)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    val_ids = {ids[i] for i in perm[: spec.n_val_fonts]}
    return (
        _subset_fonts(dataset, [i for i in ids if i not in val_ids]),
        _subset_fonts(dataset, [i for i in ids if i in val_ids]),
    )


def _subset_fonts(dataset: GlyphDataset, font_ids: list[str]) -> GlyphDataset:
    keep = set(font_ids)
    fonts = [f for f in dataset.fonts if f.font_id in keep]
    images = {k: v for k, v in dataset.images.items() if k[0] in keep}
    return GlyphDataset(dataset.charset, fonts, images, dataset.size)


def subset_charset(dataset: GlyphDataset, charset: CharSet) -> GlyphDataset:
    """Restrict a dataset to a sub-charset (for unseen-character experiments)."""
    missing = [cp for cp in charset.codepoints if cp not in set(dataset.charset.codepoints)]
    if missing:
        raise ValueError(f"charset {charset.id} not contained in dataset charset")
    keep = set(charset.codepoints)
    images = {k: v for k, v in dataset.images.items() if k[1] in keep}
    return GlyphDataset(charset, list(dataset.fonts), images, dataset.size)


def sample_minibatch(
    train: GlyphDataset, n_fonts: int, rng: np.random.Generator
) -> MinibatchDraw:
    """Uniformly draw n_fonts distinct fonts, two distinct codepoints each."""
    if n_fonts < 1 or n_fonts > len(train.fonts):
        raise DatasetTooSmall(f"cannot draw {n_fonts} fonts from {len(train.fonts)}")
    if len(train.charset) < 2:
        raise DatasetTooSmall("charset must contain at least 2 codepoints")

    font_idx = rng.choice(len(train.fonts), size=n_fonts, replace=False)
    entries: list[MinibatchEntry] = []
    images: list[GlyphImage] = []
    cps = train.charset.codepoints
    for fi in font_idx:
        fid = train.fonts[int(fi)].font_id
        c1, c2 = rng.choice(len(cps), size=2, replace=False)
        cp1, cp2 = cps[int(c1)], cps[int(c2)]
        entries.append(MinibatchEntry(fid, cp1, cp2))
        images.append(train.get(fid, cp1))
        images.append(train.get(fid, cp2))
    return MinibatchDraw(entries, images)
