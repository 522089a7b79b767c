"""Gradient verification by central finite differences.

The loss closure owns the model(s); this module only perturbs parameters held
in a ParamStore and compares the closure's reverse-mode gradients against
(L(th+h) - L(th-h)) / 2h at a sampled subset of coordinates.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteGradient, NonFiniteLoss
from .layers import ParamStore


def _check_finite(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteLoss(f"{what} is not finite: {value}")
    return value


def gradient_check(
    loss_fn,
    store: ParamStore,
    rng=None,
    h: float = 1e-5,
    n_probe: int = 40,
    analytic: dict | None = None,
):
    """Return (max_rel_err, n_checked).

    loss_fn(compute_grad: bool) -> float must zero and then fill the store's
    gradient slots when compute_grad is True, and leave parameters untouched.

    analytic optionally supplies externally computed gradients (same names and
    shapes as the store) to compare against this loss function's central
    differences. Single-precision pipelines are verified this way: their
    reverse-mode gradients are checked against finite differences of a
    float64 twin holding identical weights, because differences evaluated in
    float32 sit below the loss's own rounding noise.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if analytic is None:
        _check_finite(loss_fn(True), "loss")
        analytic = {name: grad.copy() for name, (_, grad) in store.items()}
    else:
        _check_finite(loss_fn(False), "loss")
        missing = [name for name in store.names() if name not in analytic]
        if missing:
            raise KeyError(f"analytic gradients missing for {missing[:5]}")
        analytic = {name: np.asarray(g, dtype=np.float64) for name, g in analytic.items()}
    if any(not np.all(np.isfinite(g)) for g in analytic.values()):
        raise NonFiniteGradient("reverse-mode gradient contains non-finite values")

    coords: list[tuple[str, int]] = []
    for name, (value, _) in store.items():
        coords.extend((name, i) for i in range(value.size))
    if len(coords) > n_probe:
        picks = rng.choice(len(coords), size=n_probe, replace=False)
        coords = [coords[i] for i in sorted(picks)]

    max_rel = 0.0
    for name, flat_idx in coords:
        value = store.value(name)
        flat = value.reshape(-1)
        original = flat[flat_idx]
        flat[flat_idx] = original + h
        lp = _check_finite(loss_fn(False), "loss at +h")
        flat[flat_idx] = original - h
        lm = _check_finite(loss_fn(False), "loss at -h")
        flat[flat_idx] = original
        numeric = (lp - lm) / (2.0 * h)
        a = float(analytic[name].reshape(-1)[flat_idx])
        rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
        max_rel = max(max_rel, rel)
    return max_rel, len(coords)
