"""Scikit-learn style facade over the training/evaluation stack.

GlyphEncoder is a transformer: fit() trains the encoder on a GlyphDataset (or
a dataset root path), transform() maps glyph images to embedding vectors,
predict() names the nearest training font per glyph, and score() is the
retrieval MACC of a held-out dataset.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dataset import GlyphDataset, SplitSpec, split_fonts
from .errors import ConfigInvalid
from .evalkit import embed_all, retrieval_macc
from .fontindex import build_index, query
from .trainer import TrainConfig, train
from .validation import as_dataset, check_glyph_batch


class GlyphEncoder(BaseEstimator, TransformerMixin):
    """Learn font embeddings from glyph images.

    Parameters mirror TrainConfig; `charset` and `size` are used only when fit
    receives a filesystem path instead of a ready GlyphDataset. `val_fonts`
    splits off a validation set for periodic MACC probes and best-checkpoint
    tracking (0 disables probing).
    """

    def __init__(
        self,
        objective: str = "paired_glyph",
        steps: int = 1000,
        tau: float = 0.1,
        learning_rate: float = 2e-4,
        n_fonts_per_batch: int = 16,
        feat_dim: int = 128,
        channels: tuple = (16, 32, 64),
        input_size: int = 64,
        augmentation: bool | None = None,
        denominator: str = "paper",
        margin: float = 0.2,
        eval_every: int = 200,
        seed: int = 0,
        val_fonts: int = 0,
        charset: str = "0-Z",
        out_dir=None,
    ):
        self.objective = objective
        self.steps = steps
        self.tau = tau
        self.learning_rate = learning_rate
        self.n_fonts_per_batch = n_fonts_per_batch
        self.feat_dim = feat_dim
        self.channels = channels
        self.input_size = input_size
        self.augmentation = augmentation
        self.denominator = denominator
        self.margin = margin
        self.eval_every = eval_every
        self.seed = seed
        self.val_fonts = val_fonts
        self.charset = charset
        self.out_dir = out_dir

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            objective=self.objective,
            steps=self.steps,
            tau=self.tau,
            learning_rate=self.learning_rate,
            n_fonts_per_batch=self.n_fonts_per_batch,
            seed=self.seed,
            feat_dim=self.feat_dim,
            input_size=self.input_size,
            channels=tuple(self.channels),
            augmentation=self.augmentation,
            eval_every=self.eval_every,
            denominator=self.denominator,
            margin=self.margin,
        )

    def fit(self, X, y=None):
        """Train on X: a GlyphDataset or a dataset root path."""
        dataset = as_dataset(X, self.charset, self.input_size)
        if self.val_fonts > 0:
            if self.val_fonts >= len(dataset.fonts):
                raise ConfigInvalid(
                    f"val_fonts={self.val_fonts} leaves no training fonts "
                    f"(dataset has {len(dataset.fonts)})"
                )
            train_ds, val_ds = split_fonts(dataset, SplitSpec(self.seed, self.val_fonts))
        else:
            train_ds, val_ds = dataset, None
        self.checkpoint_, self.report_ = train(
            train_ds, self._train_config(), val_ds=val_ds, out_dir=self.out_dir
        )
        from .trainer import encoder_from_checkpoint

        self.encoder_ = encoder_from_checkpoint(self.checkpoint_)
        self.train_dataset_ = train_ds
        self.val_dataset_ = val_ds
        self.index_ = build_index(self.encoder_, train_ds)
        self.n_features_in_ = self.input_size * self.input_size
        return self

    def transform(self, X) -> np.ndarray:
        """Embed glyphs: (n, feat_dim) array of raw f-hat vectors."""
        check_is_fitted(self, "encoder_")
        if isinstance(X, GlyphDataset):
            table = embed_all(self.encoder_, X)
            return table.vectors.reshape(-1, table.feat_dim)
        batch = check_glyph_batch(X, self.input_size)
        return self.encoder_.encode(batch)

    def predict(self, X) -> np.ndarray:
        """Nearest training font id for each glyph image."""
        check_is_fitted(self, "index_")
        batch = check_glyph_batch(X, self.input_size)
        out = [
            query(self.index_, img, k=1, model=self.encoder_)[0].font_id for img in batch
        ]
        return np.array(out, dtype=object)

    def score(self, X, y=None) -> float:
        """Retrieval MACC of a dataset (defaults to the fit-time validation split)."""
        check_is_fitted(self, "encoder_")
        if X is None:
            X = self.val_dataset_
            if X is None:
                raise ConfigInvalid("no validation split was held out; pass a dataset to score")
        dataset = as_dataset(X, self.charset, self.input_size)
        return retrieval_macc(embed_all(self.encoder_, dataset)).macc
