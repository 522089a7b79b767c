import numpy as np
import pytest

from glyphembed.errors import ModeMismatch, ShapeMismatch
from glyphembed.nn.models import (
    PROJECTION_DIM,
    ClassifierHead,
    DecoderModel,
    EncoderConfig,
    EncoderModel,
    ProbeHead,
    ProjectionHead,
    param_store_for,
)
from glyphembed.raster import GlyphImage

TINY = EncoderConfig(input_size=16, channels=(4,), feat_dim=8)


def test_encoder_config_derived_fields():
    cfg = EncoderConfig()
    assert cfg.stages == 4
    assert cfg.stage_channels == (16, 32, 64, 128)
    assert cfg.bottom_size == 4
    assert TINY.stages == 2 and TINY.bottom_size == 4


def test_encoder_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(feat_dim=0)
    with pytest.raises(ValueError):
        EncoderConfig(channels=(16, -1))
    with pytest.raises(ValueError):
        EncoderConfig(input_size=60)  # not divisible by 2^stages


def test_encoder_config_dict_roundtrip():
    cfg = EncoderConfig(32, (8, 12), 20)
    assert EncoderConfig.from_dict(cfg.to_dict()) == cfg


def test_encoder_output_shape_and_purity():
    enc = EncoderModel(TINY, seed=0)
    rng = np.random.default_rng(0)
    batch = rng.random((3, 16, 16))
    out1 = enc.encode(batch)
    out2 = enc.encode(batch)
    assert out1.shape == (3, 8)
    assert np.array_equal(out1, out2)
    y, ctx = enc.forward_train(batch)
    assert np.array_equal(y, out1)


def test_encoder_accepts_glyph_images_and_single_image():
    enc = EncoderModel(TINY, seed=0)
    rng = np.random.default_rng(1)
    imgs = [GlyphImage("f", 65 + i, rng.random((16, 16)).astype(np.float32)) for i in range(2)]
    out = enc.encode(imgs)
    assert out.shape == (2, 8)
    single = enc.encode(imgs[0].pixels)
    assert single.shape == (1, 8)
    assert np.allclose(single[0], out[0], atol=1e-6)


def test_encoder_rejects_wrong_size():
    enc = EncoderModel(TINY, seed=0)
    with pytest.raises(ShapeMismatch):
        enc.encode(np.zeros((2, 17, 17)))
    with pytest.raises(ShapeMismatch):
        enc.encode([])


def test_encoder_ink_polarity():
    # A pure white page carries no ink: with zero biases everywhere the
    # network input is exactly zero, so the embedding is exactly zero too.
    enc = EncoderModel(TINY, seed=0)
    white = np.ones((1, 16, 16))
    assert np.all(enc.encode(white) == 0.0)
    black = np.zeros((1, 16, 16))
    assert np.any(enc.encode(black) != 0.0)


def test_encoder_seed_determinism():
    a = EncoderModel(TINY, seed=5)
    b = EncoderModel(TINY, seed=5)
    c = EncoderModel(TINY, seed=6)
    x = np.random.default_rng(0).random((2, 16, 16))
    assert np.array_equal(a.encode(x), b.encode(x))
    assert not np.array_equal(a.encode(x), c.encode(x))


def test_projection_head_shape():
    head = ProjectionHead(8, seed=1)
    f = np.random.default_rng(0).random((5, 8)).astype(np.float32)
    z = head.project(f)
    assert z.shape == (5, PROJECTION_DIM)
    zt, _ = head.forward_train(f)
    assert np.array_equal(z, zt)


def test_decoder_unconditional():
    dec = DecoderModel(TINY, n_classes=0, seed=2)
    f = np.random.default_rng(0).random((3, 8)).astype(np.float32)
    img = dec.decode(f)
    assert img.shape == (3, 16, 16)
    assert img.min() >= 0.0 and img.max() <= 1.0
    with pytest.raises(ModeMismatch):
        dec.decode(f, np.eye(4, dtype=np.float32)[:3])


def test_decoder_conditional():
    dec = DecoderModel(TINY, n_classes=4, seed=2)
    f = np.random.default_rng(0).random((3, 8)).astype(np.float32)
    onehot = np.eye(4, dtype=np.float32)[:3]
    img = dec.decode(f, onehot)
    assert img.shape == (3, 16, 16)
    with pytest.raises(ModeMismatch):
        dec.decode(f)  # conditional decoder needs the char
    bad = onehot.copy()
    bad[0, :] = 0.5
    with pytest.raises(ModeMismatch):
        dec.decode(f, bad)
    two_hot = onehot.copy()
    two_hot[0] = [1, 1, 0, 0]
    with pytest.raises(ModeMismatch):
        dec.decode(f, two_hot)
    with pytest.raises(ShapeMismatch):
        dec.decode(f, np.eye(5, dtype=np.float32)[:3])
    with pytest.raises(ShapeMismatch):
        dec.decode(np.zeros((3, 9), dtype=np.float32), onehot)


def test_decoder_backward_slices_to_feat_dim():
    dec = DecoderModel(TINY, n_classes=4, seed=2)
    f = np.random.default_rng(0).random((2, 8)).astype(np.float32)
    onehot = np.eye(4, dtype=np.float32)[:2]
    y, ctx = dec.forward_train(f, onehot)
    g = dec.backward(ctx, np.ones_like(y))
    assert g.shape == (2, 8)


def test_classifier_head():
    head = ClassifierHead(8, n_fonts=5, seed=3)
    logits = head.classify(np.zeros((2, 8), dtype=np.float32))
    assert logits.shape == (2, 5)


def test_probe_head_clamps():
    head = ProbeHead(4, n_attributes=3, seed=4)
    head.fc.W[...] = 100.0
    head.fc.b[...] = -50.0
    pred = head.predict(np.array([[1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, -1.0, -1.0]]))
    assert pred.dtype == np.float64
    assert pred.min() >= 0.0 and pred.max() <= 1.0
    assert pred[0].max() == 1.0 and pred[1].min() == 0.0


def test_param_store_for_prefixes():
    enc = EncoderModel(TINY, seed=0)
    head = ProjectionHead(8, seed=1)
    store = param_store_for([("encoder", enc), ("head", head)])
    names = store.names()
    assert all(n.startswith(("encoder.", "head.")) for n in names)
    assert len(set(names)) == len(names)
    assert "encoder.s0.conv.W" in names
    assert "head.fc2.b" in names
