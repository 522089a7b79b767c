"""Training objectives.

The paired-glyph matching loss is the centerpiece: per font, two glyph
embeddings form the positive pair and every glyph of every other font in the
batch is a negative. `denominator` picks the anchor-count normalization:
"paper" averages over fonts (1/N), "reference" over anchors (1/2N). The
candidate sets are identical in both modes.

Value-only entry points are pure and used by oracles/tests; the *_and_grad
variants additionally return gradients for the trainer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadBatch,
    ConfigInvalid,
    LabelOutOfRange,
    NonFiniteLoss,
    ShapeMismatch,
    ZeroVector,
)

DENOMINATOR_MODES = ("paper", "reference")


@dataclass(frozen=True)
class LossValue:
    value: float
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NonFiniteLoss(f"loss value {self.value} is not finite")

    def __float__(self) -> float:
        return self.value


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise ShapeMismatch(f"vectors differ in dimension: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity of an all-zero vector is undefined")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def l2_normalize(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector("cannot L2-normalize an all-zero row")
    return z / norms


def _l2_normalize_with_back(z: np.ndarray):
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector("cannot L2-normalize an all-zero row")
    zhat = z / norms

    def back(gzhat: np.ndarray) -> np.ndarray:
        inner = np.sum(zhat * gzhat, axis=-1, keepdims=True)
        return (gzhat - zhat * inner) / norms

    return zhat, back


def _check_similarity_batch(z: np.ndarray, tau: float) -> int:
    if z.ndim != 2:
        raise BadBatch(f"expected a 2D (2N, d) batch, got shape {z.shape}")
    if z.shape[0] % 2 != 0:
        raise BadBatch(f"row count {z.shape[0]} is odd; rows pair up per font")
    n = z.shape[0] // 2
    if n < 2:
        raise BadBatch(f"need at least 2 fonts for negatives, got N={n}")
    if not tau > 0:
        raise ConfigInvalid(f"temperature must be positive, got {tau}")
    return n


def _paired_core(z: np.ndarray, tau: float, denominator: str):
    """Shared forward pass. Returns (per-anchor losses, softmax probs, zhat, back, scale)."""
    if denominator not in DENOMINATOR_MODES:
        raise ConfigInvalid(f"denominator must be one of {DENOMINATOR_MODES}, got {denominator!r}")
    z = np.asarray(z)
    n = _check_similarity_batch(z, tau)
    zhat, back = _l2_normalize_with_back(z)
    sim = (zhat @ zhat.T) / tau
    rows = np.arange(2 * n)
    partner = rows ^ 1
    # Candidates per anchor: every row but the anchor itself (partner + both
    # glyphs of each other font). Mask self with -inf, then log-sum-exp.
    masked = sim.copy()
    masked[rows, rows] = -np.inf
    row_max = masked.max(axis=1, keepdims=True)
    expo = np.exp(masked - row_max)
    denom = expo.sum(axis=1)
    per_anchor = np.log(denom) + row_max[:, 0] - sim[rows, partner]
    probs = expo / denom[:, None]
    scale = 1.0 / n if denominator == "paper" else 1.0 / (2 * n)
    return per_anchor, probs, zhat, back, scale, sim, n


def paired_glyph_matching_loss(z, tau: float, denominator: str = "paper") -> LossValue:
    per_anchor, _, _, _, scale, sim, n = _paired_core(np.asarray(z), tau, denominator)
    rows = np.arange(2 * n)
    off_font = np.ones_like(sim, dtype=bool)
    off_font[rows, rows] = False
    off_font[rows, rows ^ 1] = False
    terms = {
        "mean_pos_sim": float(np.mean(sim[rows, rows ^ 1]) * tau),
        "mean_neg_sim": float(np.mean(sim[off_font]) * tau),
        "per_anchor_mean": float(per_anchor.mean()),
    }
    return LossValue(float(per_anchor.sum() * scale), terms)


def paired_glyph_loss_and_grad(z, tau: float, denominator: str = "paper"):
    z = np.asarray(z)
    per_anchor, probs, zhat, back, scale, sim, n = _paired_core(z, tau, denominator)
    rows = np.arange(2 * n)
    gsim = probs * scale
    gsim[rows, rows ^ 1] -= scale
    gzhat = (gsim + gsim.T) @ zhat / tau
    value = LossValue(float(per_anchor.sum() * scale))
    return value, back(gzhat).astype(z.dtype)


def triplet_loss(anchor_z, positive_z, negative_z, margin: float = 0.2) -> LossValue:
    value, _ = triplet_loss_and_grad(anchor_z, positive_z, negative_z, margin)
    return value


def triplet_loss_and_grad(anchor_z, positive_z, negative_z, margin: float = 0.2):
    a = np.asarray(anchor_z)
    p = np.asarray(positive_z)
    nz = np.asarray(negative_z)
    if not (a.shape == p.shape == nz.shape) or a.ndim != 2:
        raise ShapeMismatch(f"anchor/positive/negative shapes differ: {a.shape}, {p.shape}, {nz.shape}")
    dp = np.linalg.norm(a - p, axis=1)
    dn = np.linalg.norm(a - nz, axis=1)
    hinge = dp - dn + margin
    active = hinge > 0
    value = LossValue(float(np.maximum(hinge, 0.0).mean()), {"active_frac": float(active.mean())})
    b = a.shape[0]
    # d||a-p||/da = (a-p)/||a-p||; zero at coincident points (subgradient 0).
    up = np.divide(a - p, dp[:, None], out=np.zeros_like(a), where=dp[:, None] > 0)
    un = np.divide(a - nz, dn[:, None], out=np.zeros_like(a), where=dn[:, None] > 0)
    w = active[:, None] / b
    return value, (w * (up - un), -w * up, w * un)


def classification_loss(logits, labels) -> LossValue:
    value, _ = classification_loss_and_grad(logits, labels)
    return value


def classification_loss_and_grad(logits, labels):
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[0] != labels.shape[0]:
        raise ShapeMismatch(f"logits {logits.shape} incompatible with {labels.shape[0]} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise LabelOutOfRange(
            f"labels span [{labels.min()}, {labels.max()}] outside 0..{logits.shape[1] - 1}"
        )
    b = logits.shape[0]
    row_max = logits.max(axis=1, keepdims=True)
    expo = np.exp(logits - row_max)
    lse = np.log(expo.sum(axis=1)) + row_max[:, 0]
    picked = logits[np.arange(b), labels]
    value = LossValue(float(np.mean(lse - picked)))
    grad = expo / expo.sum(axis=1, keepdims=True)
    grad[np.arange(b), labels] -= 1.0
    return value, (grad / b).astype(logits.dtype)


def reconstruction_loss(pred, target) -> LossValue:
    value, _ = l1_loss_and_grad(pred, target)
    return value


def attribute_l1(pred, target) -> LossValue:
    pred = np.asarray(pred)
    if pred.ndim != 2:
        raise ShapeMismatch(f"attribute arrays must be 2D, got {pred.shape}")
    value, _ = l1_loss_and_grad(pred, target)
    return value


def l1_loss_and_grad(pred, target):
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    value = LossValue(float(np.abs(diff).mean()))
    return value, (np.sign(diff) / diff.size).astype(pred.dtype)
