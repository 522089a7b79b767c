"""Brute-force oracles: literal, slow transcriptions of the defining formulas.

These deliberately use explicit Python loops and scalar math so they share no
code path with the vectorized implementations they check. Per-pair L2 uses the
same contiguous sum-of-squares reduction as the fast path so that comparisons
can demand exact equality; the independence lives in the loop structure,
argmin, and averaging.
"""

from __future__ import annotations

import math

import numpy as np


def oracle_cosine(u, v) -> float:
    u = [float(x) for x in np.asarray(u).reshape(-1)]
    v = [float(x) for x in np.asarray(v).reshape(-1)]
    nu = math.sqrt(sum(x * x for x in u))
    nv = math.sqrt(sum(x * x for x in v))
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def oracle_paired_loss(z, tau: float, denominator: str = "paper") -> float:
    """Eqs. 2-4, one exp at a time: pos-sim, neg-sim_k, outer font average."""
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0] // 2

    def sim(i, j):
        return oracle_cosine(z[i], z[j])

    total = 0.0
    for fn in range(n):
        font_sum = 0.0
        for k in (0, 1):
            anchor = 2 * fn + k
            partner = 2 * fn + (1 - k)
            pos = math.exp(sim(anchor, partner) / tau)
            neg = 0.0
            for fm in range(n):
                if fm == fn:
                    continue
                for l in (0, 1):
                    neg += math.exp(sim(anchor, 2 * fm + l) / tau)
            font_sum += -math.log(pos / (pos + neg))
        total += font_sum
    return total / n if denominator == "paper" else total / (2 * n)


def oracle_triplet(anchor, positive, negative, margin: float) -> float:
    a = np.asarray(anchor, dtype=np.float64)
    p = np.asarray(positive, dtype=np.float64)
    n = np.asarray(negative, dtype=np.float64)
    rows = []
    for i in range(a.shape[0]):
        dp = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a[i], p[i])))
        dn = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a[i], n[i])))
        rows.append(max(0.0, dp - dn + margin))
    return sum(rows) / len(rows)


def oracle_softmax_ce(logits, labels) -> float:
    logits = np.asarray(logits, dtype=np.float64)
    total = 0.0
    for row, label in zip(logits, labels):
        exps = [math.exp(float(x)) for x in row]
        total += -math.log(exps[int(label)] / sum(exps))
    return total / logits.shape[0]


def oracle_l1(pred, target) -> float:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    return sum(abs(float(a) - float(b)) for a, b in zip(pred, target)) / pred.size


def _pair_dist(u: np.ndarray, v: np.ndarray) -> float:
    d = np.ascontiguousarray(u) - np.ascontiguousarray(v)
    return float(np.sqrt((d * d).sum()))


def oracle_acc(vectors: np.ndarray, i_char: int, j_char: int) -> float:
    """vectors: (n_fonts, n_chars, d). Row-wise nearest gallery font, lowest index on ties."""
    n_fonts = vectors.shape[0]
    matches = 0
    for k in range(n_fonts):
        query = vectors[k, i_char]
        best_font, best_dist = None, None
        for m in range(n_fonts):
            d = _pair_dist(query, vectors[m, j_char])
            if best_dist is None or d < best_dist:
                best_font, best_dist = m, d
        if best_font == k:
            matches += 1
    return matches / n_fonts


def oracle_macc(vectors: np.ndarray) -> float:
    n_chars = vectors.shape[1]
    total = 0.0
    for i in range(n_chars):
        for j in range(n_chars):
            if i != j:
                total += oracle_acc(vectors, i, j)
    return total / (n_chars * (n_chars - 1))


def oracle_cross_macc(vectors: np.ndarray, query_idx, gallery_idx) -> float:
    total = 0.0
    for i in query_idx:
        for j in gallery_idx:
            total += oracle_acc(vectors, i, j)
    return total / (len(query_idx) * len(gallery_idx))


def oracle_query_ranking(glyph_vectors: np.ndarray, probe: np.ndarray):
    """Exhaustive per-glyph scan: (font index, min distance, argmin char index), sorted."""
    results = []
    for f in range(glyph_vectors.shape[0]):
        best_dist, best_char = None, None
        for c in range(glyph_vectors.shape[1]):
            d = _pair_dist(probe, glyph_vectors[f, c])
            if best_dist is None or d < best_dist:
                best_dist, best_char = d, c
        results.append((f, best_dist, best_char))
    results.sort(key=lambda t: (t[1], t[0]))
    return results


def oracle_adam_scalar(grads, lr, beta1=0.9, beta2=0.999, eps=1e-8, theta0=0.0):
    """One-parameter Adam transcription; returns theta after applying each grad."""
    theta, m, v = float(theta0), 0.0, 0.0
    out = []
    for t, g in enumerate(grads, start=1):
        g = float(g)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        mhat = m / (1 - beta1**t)
        vhat = v / (1 - beta2**t)
        theta -= lr * mhat / (math.sqrt(vhat) + eps)
        out.append(theta)
    return out
