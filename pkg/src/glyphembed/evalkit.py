"""Retrieval evaluation: distance matrices, ACC/MACC, cross-charset MACC,
the linear attribute probe, and method comparison reports.

All metrics operate on raw f-hat embeddings (no re-normalization) with L2
distances, computed in float64. Ties in nearest-neighbor argmin break to the
lowest font index. Brute-force counterparts live in glyphembed.oracles and
must agree exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .charset import CharSet
from .dataset import GlyphDataset
from .errors import (
    CharsetTooSmall,
    ConfigInvalid,
    EmptyCharset,
    IncomparableReports,
    MissingAttributes,
    SameCharacter,
    ShapeMismatch,
)

PROBE_LR_GRID = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
PROBE_STEPS = 2000
N_ATTRIBUTES = 37


@dataclass(frozen=True)
class EmbeddingTable:
    """Dense (font, char) -> f-hat table. Font index = position in font_ids."""

    font_ids: tuple[str, ...]
    charset: CharSet
    vectors: np.ndarray  # (n_fonts, n_chars, feat_dim) float64
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "font_ids", tuple(self.font_ids))
        v = np.asarray(self.vectors, dtype=np.float64)
        expect = (len(self.font_ids), len(self.charset))
        if v.ndim != 3 or v.shape[:2] != expect:
            raise ShapeMismatch(f"vectors shape {v.shape} does not match {expect} + feat_dim")
        if not np.all(np.isfinite(v)):
            raise ShapeMismatch("embedding table contains non-finite values")
        object.__setattr__(self, "vectors", v)

    @property
    def feat_dim(self) -> int:
        return self.vectors.shape[2]

    @property
    def n_fonts(self) -> int:
        return len(self.font_ids)

    def get(self, font_id: str, codepoint: int) -> np.ndarray:
        return self.vectors[self.font_ids.index(font_id), self.charset.index_of(codepoint)]

    def char_column(self, char: str) -> np.ndarray:
        return self.vectors[:, self.charset.index_of(ord(char))]

    def subset_fonts(self, keep: list[str]) -> "EmbeddingTable":
        idx = [self.font_ids.index(f) for f in keep]
        return EmbeddingTable(tuple(keep), self.charset, self.vectors[idx], self.source)


def embed_all(model, dataset: GlyphDataset, batch_size: int = 64, source: str = "") -> EmbeddingTable:
    if model.config.input_size != dataset.size:
        raise ShapeMismatch(
            f"model expects {model.config.input_size}px glyphs, dataset is {dataset.size}px"
        )
    font_ids = dataset.font_ids
    chars = dataset.charset.chars()
    images = [
        dataset.get(fid, ord(c)).pixels for fid in font_ids for c in chars
    ]
    chunks = [
        model.encode(np.stack(images[i : i + batch_size]))
        for i in range(0, len(images), batch_size)
    ]
    flat = np.concatenate(chunks, axis=0)
    vectors = flat.reshape(len(font_ids), len(chars), -1)
    return EmbeddingTable(font_ids, dataset.charset, vectors, source)


def distance_matrix(table: EmbeddingTable, c_i: str, c_j: str) -> np.ndarray:
    """(n_fonts, n_fonts) L2 distances; row = query font with C_i, column = gallery font with C_j."""
    q = table.char_column(c_i)
    g = table.char_column(c_j)
    diff = q[:, None, :] - g[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def _acc_from_distances(dist: np.ndarray, k: int = 1) -> float:
    if k == 1:
        # argmin returns the first index at the minimum, which is the
        # lowest-index tie-break the contract asks for.
        matches = int(np.sum(np.argmin(dist, axis=1) == np.arange(dist.shape[0])))
    else:
        topk = np.argsort(dist, axis=1, kind="stable")[:, :k]
        matches = int(np.sum(topk == np.arange(dist.shape[0])[:, None]))
    return matches / dist.shape[0]


def retrieval_acc(table: EmbeddingTable, c_i: str, c_j: str, k: int = 1) -> float:
    """Rank-k retrieval accuracy (CMC_k); ACC is the k=1 case."""
    if c_i == c_j:
        raise SameCharacter(f"ACC needs two distinct characters, got {c_i!r} twice")
    if k < 1:
        raise ConfigInvalid(f"k must be >= 1, got {k}")
    return _acc_from_distances(distance_matrix(table, c_i, c_j), k)


@dataclass(frozen=True)
class RetrievalReport:
    pair_acc: dict
    macc: float
    query_charset: str
    gallery_charset: str
    n_val_fonts: int

    def to_dict(self) -> dict:
        return {
            "macc": self.macc,
            "query_charset": self.query_charset,
            "gallery_charset": self.gallery_charset,
            "n_val_fonts": self.n_val_fonts,
            "pair_acc": {f"{ci}->{cj}": acc for (ci, cj), acc in self.pair_acc.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def retrieval_macc(table: EmbeddingTable, charset: CharSet | None = None) -> RetrievalReport:
    charset = table.charset if charset is None else charset
    if len(charset) < 2:
        raise CharsetTooSmall(f"MACC needs at least 2 characters, got {len(charset)}")
    chars = charset.chars()
    pair_acc = {
        (ci, cj): retrieval_acc(table, ci, cj) for ci in chars for cj in chars if ci != cj
    }
    macc = sum(pair_acc.values()) / (len(chars) * (len(chars) - 1))
    return RetrievalReport(pair_acc, macc, charset.id, charset.id, table.n_fonts)


def cross_macc(
    table: EmbeddingTable,
    query_charset: CharSet,
    gallery_charset: CharSet,
    allow_overlap: bool = False,
    exclude_same: bool = False,
) -> RetrievalReport:
    if len(query_charset) == 0 or len(gallery_charset) == 0:
        raise EmptyCharset("cross-charset MACC needs non-empty charsets")
    qchars, gchars = query_charset.chars(), gallery_charset.chars()
    overlap = set(qchars) & set(gchars)
    if overlap and not (allow_overlap or exclude_same):
        raise SameCharacter(
            f"query and gallery charsets share {''.join(sorted(overlap))!r}; "
            "pass allow_overlap=True or exclude_same=True"
        )
    pair_acc = {}
    for ci in qchars:
        for cj in gchars:
            if exclude_same and ci == cj:
                continue
            pair_acc[(ci, cj)] = _acc_from_distances(distance_matrix(table, ci, cj))
    if not pair_acc:
        raise EmptyCharset("no character pairs left to evaluate")
    macc = sum(pair_acc.values()) / len(pair_acc)
    return RetrievalReport(pair_acc, macc, query_charset.id, gallery_charset.id, table.n_fonts)


def chance_macc(n_val_fonts: int) -> float:
    """Rank-1 accuracy of uninformative embeddings: one font in n retrieved right."""
    return 1.0 / n_val_fonts


# --- linear attribute probe -------------------------------------------------


def load_attribute_csv(path) -> dict[str, np.ndarray]:
    """AttributeTable CSV: header font_id,attr_1..attr_37; values in [0,1]."""
    table: dict[str, np.ndarray] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "font_id" or len(header) < 2:
            raise ConfigInvalid(f"{path}: expected header font_id,attr_1..attr_N")
        n = len(header) - 1
        for row in reader:
            vals = np.array([float(x) for x in row[1:]], dtype=np.float64)
            if vals.shape != (n,) or vals.min() < 0.0 or vals.max() > 1.0:
                raise ConfigInvalid(f"{path}: bad attribute row for {row[0]!r}")
            table[row[0]] = vals
    return table


def save_attribute_csv(table: dict[str, np.ndarray], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n = len(next(iter(table.values())))
        writer.writerow(["font_id"] + [f"attr_{i + 1}" for i in range(n)])
        for fid in sorted(table):
            writer.writerow([fid] + [repr(float(v)) for v in table[fid]])


def font_embeddings(table: EmbeddingTable) -> np.ndarray:
    """Per-font embedding by max-pool over the font's glyph embeddings."""
    return table.vectors.max(axis=1)


@dataclass(frozen=True)
class ProbeResult:
    best_lr: float
    best_val_l1: float
    per_lr: dict
    n_train: int
    n_val: int


def linear_probe(
    table: EmbeddingTable,
    attrs: dict[str, np.ndarray],
    train_fonts: list[str],
    val_fonts: list[str],
    lr_grid=PROBE_LR_GRID,
    steps: int = PROBE_STEPS,
    seed: int = 0,
) -> ProbeResult:
    from .nn.models import ProbeHead
    from .nn.layers import ParamStore
    from .objectives import attribute_l1, l1_loss_and_grad
    from .trainer import AdamState, adam_step

    missing = [f for f in list(train_fonts) + list(val_fonts) if f not in attrs]
    if missing:
        raise MissingAttributes(f"no attribute rows for fonts: {missing[:5]}")
    per_font = font_embeddings(table)
    fidx = {f: i for i, f in enumerate(table.font_ids)}
    xtr = per_font[[fidx[f] for f in train_fonts]]
    xva = per_font[[fidx[f] for f in val_fonts]]
    ytr = np.stack([attrs[f] for f in train_fonts])
    yva = np.stack([attrs[f] for f in val_fonts])

    per_lr: dict[float, float] = {}
    best_lr, best_l1 = None, np.inf
    for lr in lr_grid:
        head = ProbeHead(table.feat_dim, ytr.shape[1], dtype=np.float64, seed=seed)
        store = ParamStore.collect([("probe", head)])
        state = AdamState.for_store(store)
        for _ in range(steps):
            pred, ctx = head.forward_train(xtr)
            _, gpred = l1_loss_and_grad(pred, ytr)
            store.zero_grad()
            head.backward(ctx, gpred)
            adam_step(store, state, lr)
        val_l1 = attribute_l1(head.predict(xva), yva).value
        per_lr[lr] = val_l1
        if val_l1 < best_l1:
            best_lr, best_l1 = lr, val_l1
    return ProbeResult(best_lr, best_l1, per_lr, len(train_fonts), len(val_fonts))


# --- method comparison ------------------------------------------------------


@dataclass(frozen=True)
class ComparisonTable:
    rows: list  # (name, macc, delta_from_leader), sorted best first
    query_charset: str
    gallery_charset: str
    n_val_fonts: int

    def to_dict(self) -> dict:
        return {
            "query_charset": self.query_charset,
            "gallery_charset": self.gallery_charset,
            "n_val_fonts": self.n_val_fonts,
            "ranking": [
                {"name": n, "macc": m, "delta_from_leader": d} for n, m, d in self.rows
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def compare_methods(reports: dict[str, RetrievalReport]) -> ComparisonTable:
    if len(reports) < 2:
        raise IncomparableReports(f"need at least 2 reports, got {len(reports)}")
    keys = {(r.query_charset, r.gallery_charset, r.n_val_fonts) for r in reports.values()}
    if len(keys) != 1:
        raise IncomparableReports(f"reports disagree on charset/font scope: {sorted(keys)}")
    ordered = sorted(reports.items(), key=lambda kv: (-kv[1].macc, kv[0]))
    leader = ordered[0][1].macc
    rows = [(name, r.macc, leader - r.macc) for name, r in ordered]
    (qc, gc, nf), = keys
    return ComparisonTable(rows, qc, gc, nf)
