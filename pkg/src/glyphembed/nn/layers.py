"""Differentiable layers with explicit reverse-mode backprop.

Forward passes are pure: training callers pass a context dict that collects
whatever the backward pass needs, so models can be shared read-only across
threads while a single writer trains. Parameter gradients accumulate into
per-layer arrays; ParamStore exposes them by name for the optimizer.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatch


def im2col(x: np.ndarray, k: int, stride: int, pad: int):
    """Unfold (B, C, H, W) into (B, C*k*k, Ho*Wo) patch columns."""
    B, C, H, W = x.shape
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = np.empty((B, C, k, k, Ho, Wo), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, i, j] = xp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride]
    return cols.reshape(B, C * k * k, Ho * Wo), Ho, Wo


def col2im(cols: np.ndarray, x_shape, k: int, stride: int, pad: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add patch columns back to (B, C, H, W)."""
    B, C, H, W = x_shape
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    c6 = cols.reshape(B, C, k, k, Ho, Wo)
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            xp[:, :, i : i + stride * Ho : stride, j : j + stride * Wo : stride] += c6[:, :, i, j]
    return xp[:, :, pad : pad + H, pad : pad + W]


class Layer:
    def forward(self, x: np.ndarray, ctx: dict | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, ctx: dict, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self):
        """Yield (local_name, value, grad) triples; parameterless layers yield nothing."""
        return iter(())

    def init_params(self, rng: np.random.Generator) -> None:
        pass


def _kaiming_uniform(shape, fan_in: int, rng: np.random.Generator, dtype) -> np.ndarray:
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv2d(Layer):
    def __init__(self, cin: int, cout: int, k: int = 3, stride: int = 2, pad: int = 1, dtype=np.float32):
        self.cin, self.cout, self.k, self.stride, self.pad = cin, cout, k, stride, pad
        self.W = np.zeros((cout, cin, k, k), dtype)
        self.b = np.zeros(cout, dtype)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)

    def init_params(self, rng):
        self.W[...] = _kaiming_uniform(self.W.shape, self.cin * self.k * self.k, rng, self.W.dtype)
        self.b[...] = 0

    def parameters(self):
        yield "W", self.W, self.gW
        yield "b", self.b, self.gb

    def forward(self, x, ctx=None):
        if x.ndim != 4 or x.shape[1] != self.cin:
            raise ShapeMismatch(f"conv expects (B,{self.cin},H,W), got {x.shape}")
        cols, Ho, Wo = im2col(x, self.k, self.stride, self.pad)
        W2 = self.W.reshape(self.cout, -1)
        y = np.matmul(W2, cols) + self.b[None, :, None]
        if ctx is not None:
            ctx["cols"], ctx["x_shape"] = cols, x.shape
        return y.reshape(x.shape[0], self.cout, Ho, Wo)

    def backward(self, ctx, gy):
        cols, x_shape = ctx["cols"], ctx["x_shape"]
        B = gy.shape[0]
        g2 = gy.reshape(B, self.cout, -1)
        self.gW += np.matmul(g2, cols.transpose(0, 2, 1)).sum(0).reshape(self.W.shape)
        self.gb += g2.sum(axis=(0, 2))
        gcols = np.matmul(self.W.reshape(self.cout, -1).T, g2)
        return col2im(gcols, x_shape, self.k, self.stride, self.pad)


class ConvTranspose2d(Layer):
    """Transposed convolution; with k=4, stride=2, pad=1 it exactly doubles H and W."""

    def __init__(self, cin: int, cout: int, k: int = 4, stride: int = 2, pad: int = 1, dtype=np.float32):
        self.cin, self.cout, self.k, self.stride, self.pad = cin, cout, k, stride, pad
        self.W = np.zeros((cin, cout, k, k), dtype)
        self.b = np.zeros(cout, dtype)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)

    def init_params(self, rng):
        self.W[...] = _kaiming_uniform(self.W.shape, self.cin * self.k * self.k, rng, self.W.dtype)
        self.b[...] = 0

    def parameters(self):
        yield "W", self.W, self.gW
        yield "b", self.b, self.gb

    def out_size(self, s: int) -> int:
        return (s - 1) * self.stride - 2 * self.pad + self.k

    def forward(self, x, ctx=None):
        if x.ndim != 4 or x.shape[1] != self.cin:
            raise ShapeMismatch(f"tconv expects (B,{self.cin},H,W), got {x.shape}")
        B, _, Hi, Wi = x.shape
        Ho, Wo = self.out_size(Hi), self.out_size(Wi)
        x2 = x.reshape(B, self.cin, Hi * Wi)
        V2 = self.W.reshape(self.cin, -1)
        colsy = np.matmul(V2.T, x2)
        y = col2im(colsy, (B, self.cout, Ho, Wo), self.k, self.stride, self.pad)
        y += self.b[None, :, None, None]
        if ctx is not None:
            ctx["x2"], ctx["in_hw"] = x2, (Hi, Wi)
        return y

    def backward(self, ctx, gy):
        x2, (Hi, Wi) = ctx["x2"], ctx["in_hw"]
        B = gy.shape[0]
        gcols, _, _ = im2col(gy, self.k, self.stride, self.pad)
        self.gW += np.matmul(x2, gcols.transpose(0, 2, 1)).sum(0).reshape(self.W.shape)
        self.gb += gy.sum(axis=(0, 2, 3))
        gx2 = np.matmul(self.W.reshape(self.cin, -1), gcols)
        return gx2.reshape(B, self.cin, Hi, Wi)


class Linear(Layer):
    def __init__(self, din: int, dout: int, dtype=np.float32):
        self.din, self.dout = din, dout
        self.W = np.zeros((dout, din), dtype)
        self.b = np.zeros(dout, dtype)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)

    def init_params(self, rng):
        self.W[...] = _kaiming_uniform(self.W.shape, self.din, rng, self.W.dtype)
        self.b[...] = 0

    def parameters(self):
        yield "W", self.W, self.gW
        yield "b", self.b, self.gb

    def forward(self, x, ctx=None):
        if x.ndim != 2 or x.shape[1] != self.din:
            raise ShapeMismatch(f"linear expects (B,{self.din}), got {x.shape}")
        if ctx is not None:
            ctx["x"] = x
        return x @ self.W.T + self.b

    def backward(self, ctx, gy):
        self.gW += gy.T @ ctx["x"]
        self.gb += gy.sum(0)
        return gy @ self.W


class ReLU(Layer):
    def forward(self, x, ctx=None):
        if ctx is not None:
            ctx["mask"] = x > 0
        return np.maximum(x, 0)

    def backward(self, ctx, gy):
        return gy * ctx["mask"]


class Sigmoid(Layer):
    def forward(self, x, ctx=None):
        y = 1.0 / (1.0 + np.exp(-x))
        if ctx is not None:
            ctx["y"] = y
        return y

    def backward(self, ctx, gy):
        y = ctx["y"]
        return gy * y * (1.0 - y)


class GlobalAvgPool(Layer):
    def forward(self, x, ctx=None):
        if ctx is not None:
            ctx["hw"] = x.shape[2:]
        return x.mean(axis=(2, 3))

    def backward(self, ctx, gy):
        h, w = ctx["hw"]
        return np.broadcast_to(gy[:, :, None, None], gy.shape + (h, w)) / (h * w)


class Sequential(Layer):
    def __init__(self, named_layers: list[tuple[str, Layer]]):
        self.named_layers = named_layers

    def forward(self, x, ctx=None):
        if ctx is not None:
            ctx["sub"] = []
        for _, layer in self.named_layers:
            sub = {} if ctx is not None else None
            x = layer.forward(x, sub)
            if ctx is not None:
                ctx["sub"].append(sub)
        return x

    def backward(self, ctx, gy):
        for (_, layer), sub in zip(reversed(self.named_layers), reversed(ctx["sub"])):
            gy = layer.backward(sub, gy)
        return gy

    def parameters(self):
        for lname, layer in self.named_layers:
            for pname, value, grad in layer.parameters():
                yield f"{lname}.{pname}", value, grad

    def init_params(self, rng):
        for _, layer in self.named_layers:
            layer.init_params(rng)


class ParamStore:
    """Ordered mapping of unique parameter names to (value, gradient) array pairs.

    Values and gradients are live references into the owning layers; the
    optimizer mutates values in place.
    """

    def __init__(self):
        self._slots: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def collect(cls, named_models) -> "ParamStore":
        store = cls()
        for prefix, model in named_models:
            for name, value, grad in model.parameters():
                store.add(f"{prefix}.{name}", value, grad)
        return store

    def add(self, name: str, value: np.ndarray, grad: np.ndarray):
        if name in self._slots:
            raise ValueError(f"duplicate parameter name {name}")
        if value.shape != grad.shape:
            raise ShapeMismatch(f"grad shape {grad.shape} != param shape {value.shape} for {name}")
        self._slots[name] = (value, grad)

    def names(self) -> list[str]:
        return list(self._slots)

    def items(self):
        return self._slots.items()

    def value(self, name: str) -> np.ndarray:
        return self._slots[name][0]

    def grad(self, name: str) -> np.ndarray:
        return self._slots[name][1]

    def zero_grad(self):
        for _, grad in self._slots.values():
            grad[...] = 0

    def n_parameters(self) -> int:
        return sum(v.size for v, _ in self._slots.values())

    def any_nonfinite_grad(self) -> bool:
        return any(not np.all(np.isfinite(g)) for _, g in self._slots.values())

    def load_values(self, tensors: dict[str, np.ndarray]):
        missing = [name for name in self._slots if name not in tensors]
        if missing:
            raise ShapeMismatch(f"missing stored tensors for parameters: {missing[:5]}")
        for name, (value, _) in self._slots.items():
            src = tensors[name]
            if src.shape != value.shape:
                raise ShapeMismatch(f"{name}: stored {src.shape} != model {value.shape}")
            value[...] = src.astype(value.dtype)
