"""Training loop: Adam, objective dispatch, augmentation wiring, logging,
checkpointing with bitwise-exact resume.

Determinism contract: (seed, config, dataset) fully determine the parameter
trajectory. The training RNG is consumed only by batch sampling, augmentation,
and style-transfer target draws, in a fixed per-step order; validation probes
never touch it. Its bit-generator state rides along in checkpoint metadata so
100 steps + resume 100 equals 200 straight steps bitwise.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .augment import random_resized_crop
from .dataset import GlyphDataset, sample_minibatch
from .errors import ConfigInvalid, NonFiniteGradient, VersionMismatch
from .nn.checkpoint import Checkpoint, save_checkpoint
from .nn.layers import ParamStore
from .nn.models import (
    ClassifierHead,
    DecoderModel,
    EncoderConfig,
    EncoderModel,
    ProjectionHead,
)
from .objectives import (
    DENOMINATOR_MODES,
    classification_loss_and_grad,
    l1_loss_and_grad,
    paired_glyph_loss_and_grad,
    triplet_loss_and_grad,
    _l2_normalize_with_back,
)

OBJECTIVES = ("paired_glyph", "classification", "autoencoder", "style_transfer", "triplet")
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "paired_glyph"
    steps: int = 1000
    tau: float = 0.1
    learning_rate: float = 2e-4
    n_fonts_per_batch: int = 16
    seed: int = 0
    feat_dim: int = 128
    input_size: int = 64
    channels: tuple = (16, 32, 64)
    augmentation: bool | None = None  # None = objective default (on iff paired_glyph)
    eval_every: int = 200
    log_every: int = 50
    denominator: str = "paper"
    margin: float = 0.2

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigInvalid(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.steps <= 0 or self.learning_rate <= 0 or self.tau <= 0:
            raise ConfigInvalid("steps, learning_rate, and tau must be positive")
        if self.n_fonts_per_batch < 2:
            raise ConfigInvalid("need at least 2 fonts per batch (negatives)")
        if self.eval_every <= 0 or self.log_every <= 0:
            raise ConfigInvalid("eval_every and log_every must be positive")
        if self.denominator not in DENOMINATOR_MODES:
            raise ConfigInvalid(f"denominator must be one of {DENOMINATOR_MODES}")
        if self.feat_dim <= 0:
            raise ConfigInvalid("feat_dim must be positive")

    @property
    def augment_resolved(self) -> bool:
        # Augmentation helps the contrastive objectives only; it is forced off
        # for classification/autoencoder/style_transfer regardless of the flag.
        if self.objective in ("classification", "autoencoder", "style_transfer"):
            return False
        if self.augmentation is None:
            return self.objective == "paired_glyph"
        return bool(self.augmentation)

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(self.input_size, tuple(self.channels), self.feat_dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["channels"] = tuple(d.get("channels", (16, 32, 64)))
        return cls(**d)


class AdamState:
    """Per-parameter first/second moments plus the shared step counter t."""

    def __init__(self, m: dict, v: dict, t: int = 0):
        self.m = m
        self.v = v
        self.t = t

    @classmethod
    def for_store(cls, store: ParamStore) -> "AdamState":
        m = {name: np.zeros_like(value) for name, (value, _) in store.items()}
        v = {name: np.zeros_like(value) for name, (value, _) in store.items()}
        return cls(m, v, 0)


def adam_step(store: ParamStore, state: AdamState, lr: float) -> None:
    if store.any_nonfinite_grad():
        raise NonFiniteGradient("gradient contains NaN/Inf; aborting step")
    state.t += 1
    bc1 = 1.0 - ADAM_BETA1**state.t
    bc2 = 1.0 - ADAM_BETA2**state.t
    for name, (value, grad) in store.items():
        m, v = state.m[name], state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        value -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


@dataclass
class TrainReport:
    losses: list = field(default_factory=list)  # (step, loss)
    maccs: list = field(default_factory=list)  # (step, macc)
    seconds: float = 0.0
    checkpoint_path: Path | None = None
    best_step: int = 0
    best_macc: float | None = None

    @property
    def final_loss(self) -> float:
        return self.losses[-1][1]

    def smoothed_loss(self, window: int = 20):
        vals = [l for _, l in self.losses]
        head = vals[:window]
        tail = vals[-window:]
        return sum(head) / len(head), sum(tail) / len(tail)


class _Run:
    """Everything one training run owns: models, store, optimizer, rng."""

    def __init__(self, train_ds: GlyphDataset, config: TrainConfig):
        self.config = config
        self.dataset = train_ds
        enc_cfg = config.encoder_config()
        if train_ds.size != config.input_size:
            raise ConfigInvalid(
                f"dataset glyphs are {train_ds.size}px but config.input_size={config.input_size}"
            )
        ss = np.random.SeedSequence(config.seed)
        s_enc, s_head, s_batch = ss.spawn(3)
        self.encoder = EncoderModel(enc_cfg, seed=s_enc)
        self.font_ids = train_ds.font_ids
        self.head = self._make_head(s_head)
        named = [("encoder", self.encoder)]
        if self.head is not None:
            named.append((self.head_name, self.head))
        self.store = ParamStore.collect(named)
        self.adam = AdamState.for_store(self.store)
        self.rng = np.random.default_rng(s_batch)
        self.step = 0

    def _make_head(self, seed):
        obj = self.config.objective
        cfg = self.config.encoder_config()
        if obj in ("paired_glyph", "triplet"):
            self.head_name = "projection"
            return ProjectionHead(cfg.feat_dim, seed=seed)
        if obj == "classification":
            self.head_name = "classifier"
            return ClassifierHead(cfg.feat_dim, len(self.font_ids), seed=seed)
        if obj == "autoencoder":
            self.head_name = "decoder"
            return DecoderModel(cfg, n_classes=0, seed=seed)
        if obj == "style_transfer":
            self.head_name = "decoder"
            if len(self.dataset.charset) < 2:
                raise ConfigInvalid("style_transfer needs a charset with at least 2 characters")
            return DecoderModel(cfg, n_classes=len(self.dataset.charset), seed=seed)
        raise ConfigInvalid(obj)

    # -- per-objective step implementations --

    def _augmented(self, images: np.ndarray) -> np.ndarray:
        if not self.config.augment_resolved:
            return images
        return np.stack([random_resized_crop(img, self.rng) for img in images])

    def _step_paired(self, images: np.ndarray) -> float:
        fhat, enc_ctx = self.encoder.forward_train(images)
        z, proj_ctx = self.head.forward_train(fhat)
        loss, gz = paired_glyph_loss_and_grad(z, self.config.tau, self.config.denominator)
        gf = self.head.backward(proj_ctx, gz)
        self.encoder.backward(enc_ctx, gf)
        return loss.value

    def _step_triplet(self, images: np.ndarray) -> float:
        fhat, enc_ctx = self.encoder.forward_train(images)
        z, proj_ctx = self.head.forward_train(fhat)
        zhat, back = _l2_normalize_with_back(z)
        n2 = zhat.shape[0]
        font_of = np.arange(n2) // 2
        ai, ni = np.nonzero(font_of[:, None] != font_of[None, :])
        loss, (ga, gp, gn) = triplet_loss_and_grad(
            zhat[ai], zhat[ai ^ 1], zhat[ni], self.config.margin
        )
        gzhat = np.zeros_like(zhat)
        np.add.at(gzhat, ai, ga)
        np.add.at(gzhat, ai ^ 1, gp)
        np.add.at(gzhat, ni, gn)
        gf = self.head.backward(proj_ctx, back(gzhat))
        self.encoder.backward(enc_ctx, gf)
        return loss.value

    def _step_classification(self, images: np.ndarray, labels: np.ndarray) -> float:
        fhat, enc_ctx = self.encoder.forward_train(images)
        logits, head_ctx = self.head.forward_train(fhat)
        loss, glogits = classification_loss_and_grad(logits, labels)
        gf = self.head.backward(head_ctx, glogits)
        self.encoder.backward(enc_ctx, gf)
        return loss.value

    def _step_autoencoder(self, images: np.ndarray) -> float:
        fhat, enc_ctx = self.encoder.forward_train(images)
        pred, dec_ctx = self.head.forward_train(fhat)
        loss, gpred = l1_loss_and_grad(pred, images.astype(pred.dtype))
        gf = self.head.backward(dec_ctx, gpred)
        self.encoder.backward(enc_ctx, gf)
        return loss.value

    def _step_style_transfer(self, draw) -> float:
        images = draw.image_array()
        n_chars = len(self.dataset.charset)
        targets_idx = self.rng.integers(0, n_chars, size=images.shape[0])
        chars = self.dataset.charset.codepoints
        per_image_font = [e.font_id for e in draw.entries for _ in (0, 1)]
        target_images = [
            self.dataset.get(fid, chars[targets_idx[pos]]).pixels
            for pos, fid in enumerate(per_image_font)
        ]
        onehot = np.zeros((images.shape[0], n_chars), dtype=np.float32)
        onehot[np.arange(images.shape[0]), targets_idx] = 1.0
        target = np.stack(target_images)
        fhat, enc_ctx = self.encoder.forward_train(images)
        pred, dec_ctx = self.head.forward_train(fhat, onehot)
        loss, gpred = l1_loss_and_grad(pred, target.astype(pred.dtype))
        gf = self.head.backward(dec_ctx, gpred)
        self.encoder.backward(enc_ctx, gf)
        return loss.value

    def one_step(self) -> float:
        self.store.zero_grad()
        draw = sample_minibatch(self.dataset, self.config.n_fonts_per_batch, self.rng)
        obj = self.config.objective
        if obj == "style_transfer":
            loss = self._step_style_transfer(draw)
        else:
            images = self._augmented(draw.image_array())
            if obj == "paired_glyph":
                loss = self._step_paired(images)
            elif obj == "triplet":
                loss = self._step_triplet(images)
            elif obj == "classification":
                fid_index = {f: i for i, f in enumerate(self.font_ids)}
                labels = np.array(
                    [fid_index[e.font_id] for e in draw.entries for _ in (0, 1)]
                )
                loss = self._step_classification(images, labels)
            else:
                loss = self._step_autoencoder(images)
        self.step += 1
        return loss

    # -- persistence --

    def to_checkpoint(self) -> Checkpoint:
        tensors = {}
        for name, (value, _) in self.store.items():
            tensors[f"model/{name}"] = value.astype(np.float32, copy=True)
        for name in self.adam.m:
            tensors[f"adam/m/{name}"] = self.adam.m[name].astype(np.float32, copy=True)
            tensors[f"adam/v/{name}"] = self.adam.v[name].astype(np.float32, copy=True)
        meta = {
            "step": self.step,
            "adam_t": self.adam.t,
            "objective": self.config.objective,
            "tau": self.config.tau,
            "seed": self.config.seed,
            "rng_state": self.rng.bit_generator.state,
            "font_ids": list(self.font_ids),
            "charset": {
                "id": self.dataset.charset.id,
                "chars": self.dataset.charset.chars(),
            },
        }
        return Checkpoint(
            model_kind=f"trainer/{self.config.objective}",
            config={"train": self.config.to_dict()},
            metadata=meta,
            tensors=tensors,
        )

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, train_ds: GlyphDataset) -> "_Run":
        config = TrainConfig.from_dict(ckpt.config["train"])
        run = cls(train_ds, config)
        if list(run.font_ids) != list(ckpt.metadata["font_ids"]):
            raise ConfigInvalid("dataset font list differs from the checkpointed run")
        model_tensors = {
            name[len("model/") :]: arr
            for name, arr in ckpt.tensors.items()
            if name.startswith("model/")
        }
        run.store.load_values(model_tensors)
        for name in run.adam.m:
            run.adam.m[name][...] = ckpt.tensors[f"adam/m/{name}"]
            run.adam.v[name][...] = ckpt.tensors[f"adam/v/{name}"]
        run.adam.t = int(ckpt.metadata["adam_t"])
        run.step = int(ckpt.metadata["step"])
        run.rng.bit_generator.state = ckpt.metadata["rng_state"]
        return run


def _probe_macc(run: _Run, val_ds: GlyphDataset) -> float:
    from .evalkit import embed_all, retrieval_macc

    table = embed_all(run.encoder, val_ds)
    return retrieval_macc(table).macc


def _drive(
    run: _Run,
    extra_steps: int,
    val_ds: GlyphDataset | None,
    out_dir,
    report: TrainReport,
) -> tuple[Checkpoint, TrainReport]:
    config = run.config
    out_dir = Path(out_dir) if out_dir is not None else None
    log_fh = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        log_fh = open(out_dir / "train_log.jsonl", "a")
    best_tensors = None
    t0 = time.monotonic()
    try:
        end_step = run.step + extra_steps
        while run.step < end_step:
            loss = run.one_step()  # raises NonFiniteLoss via LossValue on bad math
            adam_step(run.store, run.adam, config.learning_rate)
            record = {"step": run.step, "loss": loss}
            if run.step % config.log_every == 0 or run.step == end_step:
                report.losses.append((run.step, loss))
            if val_ds is not None and (
                run.step % config.eval_every == 0 or run.step == end_step
            ):
                macc = _probe_macc(run, val_ds)
                report.maccs.append((run.step, macc))
                record["macc"] = macc
                if report.best_macc is None or macc > report.best_macc:
                    report.best_macc = macc
                    report.best_step = run.step
                    best_tensors = {
                        f"model/{name}": value.astype(np.float32, copy=True)
                        for name, (value, _) in run.store.items()
                    }
            if log_fh is not None and (
                "macc" in record or run.step % config.log_every == 0 or run.step == end_step
            ):
                record["seconds"] = round(time.monotonic() - t0, 3)
                log_fh.write(json.dumps(record) + "\n")
    finally:
        if log_fh is not None:
            log_fh.close()
    report.seconds += time.monotonic() - t0

    ckpt = run.to_checkpoint()
    if report.best_macc is not None:
        ckpt.metadata["best_step"] = report.best_step
        ckpt.metadata["best_macc"] = report.best_macc
    if out_dir is not None:
        report.checkpoint_path = save_checkpoint(ckpt, out_dir / "checkpoint.gemb")
        if best_tensors is not None:
            best = Checkpoint(
                model_kind=ckpt.model_kind,
                config=ckpt.config,
                metadata={
                    "step": report.best_step,
                    "macc": report.best_macc,
                    "objective": config.objective,
                    "tau": config.tau,
                    "seed": config.seed,
                    "font_ids": list(run.font_ids),
                    "charset": ckpt.metadata["charset"],
                },
                tensors=best_tensors,
            )
            save_checkpoint(best, out_dir / "best.gemb")
    return ckpt, report


def train(
    train_ds: GlyphDataset,
    config: TrainConfig,
    val_ds: GlyphDataset | None = None,
    out_dir=None,
) -> tuple[Checkpoint, TrainReport]:
    run = _Run(train_ds, config)
    return _drive(run, config.steps, val_ds, out_dir, TrainReport())


def resume(
    ckpt: Checkpoint,
    train_ds: GlyphDataset,
    extra_steps: int,
    val_ds: GlyphDataset | None = None,
    out_dir=None,
    expect_objective: str | None = None,
) -> tuple[Checkpoint, TrainReport]:
    if not ckpt.model_kind.startswith("trainer/"):
        raise VersionMismatch(f"checkpoint kind {ckpt.model_kind!r} is not a training state")
    if expect_objective is not None and ckpt.metadata.get("objective") != expect_objective:
        raise VersionMismatch(
            f"checkpoint objective {ckpt.metadata.get('objective')!r} != {expect_objective!r}"
        )
    run = _Run.from_checkpoint(ckpt, train_ds)
    return _drive(run, extra_steps, val_ds, out_dir, TrainReport())


def encoder_from_checkpoint(ckpt: Checkpoint) -> EncoderModel:
    """Rebuild just the encoder (for evaluation/indexing) from any run checkpoint."""
    config = TrainConfig.from_dict(ckpt.config["train"])
    model = EncoderModel(config.encoder_config())
    store = ParamStore.collect([("encoder", model)])
    wanted = {
        name[len("model/") :]: arr
        for name, arr in ckpt.tensors.items()
        if name.startswith("model/encoder.")
    }
    store.load_values(wanted)
    return model
