"""Model definitions: glyph encoder, projection head, decoder, and linear heads.

The encoder maps a batch of glyph images to embedding vectors by a stack of
stride-2 3x3 convolutions with ReLU and a final global average pool. Glyph
pixels arrive white-background (1.0 = paper); the encoder flips them to ink
intensity internally so zero-padding at borders matches the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModeMismatch, ShapeMismatch
from ..raster import GlyphImage
from .layers import (
    Conv2d,
    ConvTranspose2d,
    GlobalAvgPool,
    Linear,
    ParamStore,
    ReLU,
    Sequential,
    Sigmoid,
)

# Output width of the projection head used inside contrastive losses.
PROJECTION_DIM = 70


@dataclass(frozen=True)
class EncoderConfig:
    input_size: int = 64
    channels: tuple[int, ...] = (16, 32, 64)
    feat_dim: int = 128

    def __post_init__(self):
        if self.feat_dim <= 0:
            raise ValueError("feat_dim must be positive")
        if any(c <= 0 for c in self.channels):
            raise ValueError("channel widths must be positive")
        if self.input_size % (2 ** self.stages) != 0:
            raise ValueError(
                f"input_size {self.input_size} not divisible by 2^{self.stages}"
            )

    @property
    def stages(self) -> int:
        return len(self.channels) + 1

    @property
    def stage_channels(self) -> tuple[int, ...]:
        return self.channels + (self.feat_dim,)

    @property
    def bottom_size(self) -> int:
        return self.input_size // (2 ** self.stages)

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "channels": list(self.channels),
            "feat_dim": self.feat_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(d["input_size"], tuple(d["channels"]), d["feat_dim"])


def _as_image_batch(batch, input_size: int, dtype) -> np.ndarray:
    """Accept a list of GlyphImages or an (B, H, W) array; return ink batch (B, 1, H, W)."""
    if isinstance(batch, (list, tuple)):
        if not batch:
            raise ShapeMismatch("empty batch")
        arr = np.stack([g.pixels if isinstance(g, GlyphImage) else np.asarray(g) for g in batch])
    else:
        arr = np.asarray(batch)
        if arr.ndim == 2:
            arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != input_size or arr.shape[2] != input_size:
        raise ShapeMismatch(f"expected (B,{input_size},{input_size}) images, got {arr.shape}")
    return (1.0 - arr.astype(dtype))[:, None]


class EncoderModel:
    """The embedding network: glyph image batch -> (batch, feat_dim) vectors."""

    def __init__(self, config: EncoderConfig, dtype=np.float32, seed: int = 0):
        self.config = config
        self.dtype = dtype
        layers: list = []
        cin = 1
        for i, cout in enumerate(config.stage_channels):
            layers.append((f"s{i}.conv", Conv2d(cin, cout, 3, 2, 1, dtype)))
            layers.append((f"s{i}.relu", ReLU()))
            cin = cout
        layers.append(("gap", GlobalAvgPool()))
        self.net = Sequential(layers)
        self.net.init_params(np.random.default_rng(seed))

    @property
    def feat_dim(self) -> int:
        return self.config.feat_dim

    def parameters(self):
        return self.net.parameters()

    def encode(self, batch) -> np.ndarray:
        """Pure forward pass; no caching, safe for concurrent readers."""
        x = _as_image_batch(batch, self.config.input_size, self.dtype)
        return self.net.forward(x)

    def forward_train(self, batch):
        x = _as_image_batch(batch, self.config.input_size, self.dtype)
        ctx: dict = {}
        return self.net.forward(x, ctx), ctx

    def backward(self, ctx, gfhat):
        return self.net.backward(ctx, gfhat)


class ProjectionHead:
    """Two-layer head used only inside contrastive losses; never at retrieval time."""

    def __init__(self, feat_dim: int, dtype=np.float32, seed: int = 1):
        self.feat_dim = feat_dim
        self.net = Sequential(
            [
                ("fc1", Linear(feat_dim, feat_dim, dtype)),
                ("relu", ReLU()),
                ("fc2", Linear(feat_dim, PROJECTION_DIM, dtype)),
            ]
        )
        self.net.init_params(np.random.default_rng(seed))

    def parameters(self):
        return self.net.parameters()

    def project(self, fhat: np.ndarray) -> np.ndarray:
        return self.net.forward(np.asarray(fhat))

    def forward_train(self, fhat):
        ctx: dict = {}
        return self.net.forward(fhat, ctx), ctx

    def backward(self, ctx, gz):
        return self.net.backward(ctx, gz)


class DecoderModel:
    """Mirror of the encoder: embedding (optionally + one-hot char) -> image in [0,1]."""

    def __init__(self, config: EncoderConfig, n_classes: int = 0, dtype=np.float32, seed: int = 2):
        self.config = config
        self.n_classes = n_classes
        self.dtype = dtype
        chans = config.stage_channels
        s0 = config.bottom_size
        self.bottom = (chans[-1], s0, s0)
        in_dim = config.feat_dim + n_classes
        layers: list = [("fc", Linear(in_dim, chans[-1] * s0 * s0, dtype))]
        rev = list(reversed(chans))
        for i in range(len(rev) - 1):
            layers.append((f"up{i}.tconv", ConvTranspose2d(rev[i], rev[i + 1], 4, 2, 1, dtype)))
            layers.append((f"up{i}.relu", ReLU()))
        layers.append((f"up{len(rev) - 1}.tconv", ConvTranspose2d(rev[-1], 1, 4, 2, 1, dtype)))
        layers.append(("out", Sigmoid()))
        self.fc = layers[0][1]
        self.named = layers
        self.net = Sequential(layers[1:])
        rng = np.random.default_rng(seed)
        self.fc.init_params(rng)
        self.net.init_params(rng)

    @property
    def conditional(self) -> bool:
        return self.n_classes > 0

    def parameters(self):
        for name, value, grad in self.fc.parameters():
            yield f"fc.{name}", value, grad
        yield from self.net.parameters()

    def _input_vector(self, fhat: np.ndarray, char_onehot: np.ndarray | None) -> np.ndarray:
        fhat = np.asarray(fhat, dtype=self.dtype)
        if fhat.ndim != 2 or fhat.shape[1] != self.config.feat_dim:
            raise ShapeMismatch(f"expected (B,{self.config.feat_dim}) embeddings, got {fhat.shape}")
        if self.conditional:
            if char_onehot is None:
                raise ModeMismatch("conditional decoder requires char_onehot")
            char_onehot = np.asarray(char_onehot, dtype=self.dtype)
            if char_onehot.shape != (fhat.shape[0], self.n_classes):
                raise ShapeMismatch(
                    f"char_onehot must be (B,{self.n_classes}), got {char_onehot.shape}"
                )
            ok = np.isin(char_onehot, (0.0, 1.0)).all() and np.all(char_onehot.sum(axis=1) == 1.0)
            if not ok:
                raise ModeMismatch("char_onehot rows must be one-hot (exactly one 1)")
            return np.concatenate([fhat, char_onehot], axis=1)
        if char_onehot is not None:
            raise ModeMismatch("decoder is unconditional; char_onehot not accepted")
        return fhat

    def decode(self, fhat, char_onehot=None) -> np.ndarray:
        v = self._input_vector(fhat, char_onehot)
        h = self.fc.forward(v).reshape((-1,) + self.bottom)
        return self.net.forward(h)[:, 0]

    def forward_train(self, fhat, char_onehot=None):
        v = self._input_vector(fhat, char_onehot)
        fc_ctx: dict = {}
        h = self.fc.forward(v, fc_ctx).reshape((-1,) + self.bottom)
        net_ctx: dict = {}
        y = self.net.forward(h, net_ctx)
        return y[:, 0], {"fc": fc_ctx, "net": net_ctx, "b": y.shape[0]}

    def backward(self, ctx, gy):
        g = self.net.backward(ctx["net"], gy[:, None])
        g = self.fc.backward(ctx["fc"], g.reshape(ctx["b"], -1))
        return g[:, : self.config.feat_dim]


class ClassifierHead:
    """Single affine map from embeddings to per-font logits."""

    def __init__(self, feat_dim: int, n_fonts: int, dtype=np.float32, seed: int = 3):
        self.n_fonts = n_fonts
        self.fc = Linear(feat_dim, n_fonts, dtype)
        self.fc.init_params(np.random.default_rng(seed))

    def parameters(self):
        for name, value, grad in self.fc.parameters():
            yield f"fc.{name}", value, grad

    def classify(self, fhat: np.ndarray) -> np.ndarray:
        return self.fc.forward(np.asarray(fhat))

    def forward_train(self, fhat):
        ctx: dict = {}
        return self.fc.forward(fhat, ctx), ctx

    def backward(self, ctx, glogits):
        return self.fc.backward(ctx, glogits)


class ProbeHead:
    """Linear probe from font embeddings to attribute values in [0,1]."""

    def __init__(self, feat_dim: int, n_attributes: int = 37, dtype=np.float64, seed: int = 4):
        self.n_attributes = n_attributes
        self.fc = Linear(feat_dim, n_attributes, dtype)
        self.fc.init_params(np.random.default_rng(seed))

    def parameters(self):
        for name, value, grad in self.fc.parameters():
            yield f"fc.{name}", value, grad

    def predict(self, fhat: np.ndarray) -> np.ndarray:
        """Evaluation-time predictions, clamped to the attribute range."""
        return np.clip(self.fc.forward(np.asarray(fhat)), 0.0, 1.0)

    def forward_train(self, fhat):
        ctx: dict = {}
        return self.fc.forward(fhat, ctx), ctx

    def backward(self, ctx, gpred):
        return self.fc.backward(ctx, gpred)


def param_store_for(named_models) -> ParamStore:
    return ParamStore.collect(named_models)
