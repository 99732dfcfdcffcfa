"""Encoder contracts: conv gradients, determinism, pretraining, checkpoints."""

import numpy as np
import pytest

from touchlab.backbone import (
    ConvEncoder,
    EncoderSpec,
    conv2d,
    flatten,
    maxpool2,
    pretrain_frozen_encoder,
)
from touchlab.diffcore import Tensor, t_sum
from touchlab.diffcore.gradcheck import check_gradients
from touchlab.env import ImageBank
from touchlab.errors import ConfigurationError, InputError


def test_conv2d_matches_direct_convolution():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 5, 5, 3))
    w = rng.normal(size=(3, 3, 3, 4))
    b = rng.normal(size=4)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b)).data
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    want = np.zeros((2, 5, 5, 4))
    for n in range(2):
        for i in range(5):
            for j in range(5):
                patch = xp[n, i : i + 3, j : j + 3, :]
                want[n, i, j] = np.tensordot(patch, w, axes=([0, 1, 2], [0, 1, 2])) + b
    assert np.allclose(out, want, atol=1e-12)


def test_conv2d_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(size=(1, 4, 4, 2)))
    w = Tensor(rng.normal(size=(3, 3, 2, 3)))
    b = Tensor(rng.normal(size=3))
    coeff = Tensor(rng.normal(size=(1, 4, 4, 3)))
    check_gradients(lambda: t_sum(conv2d(x, w, b) * coeff), [x, w, b])


def test_maxpool_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    # Entries are well separated so the argmax never flips under the probe.
    x = Tensor(rng.permutation(32).astype(float).reshape(1, 4, 4, 2))
    coeff = Tensor(rng.normal(size=(1, 2, 2, 2)))
    check_gradients(lambda: t_sum(maxpool2(x) * coeff), [x])


def test_maxpool_forward_and_tie_break():
    x = np.zeros((1, 2, 2, 1))
    x[0, :, :, 0] = [[3.0, 3.0], [1.0, 2.0]]
    out = maxpool2(Tensor(x))
    assert out.data.shape == (1, 1, 1, 1)
    assert out.data[0, 0, 0, 0] == 3.0
    out.backward()


def test_flatten_round_trip_shape():
    x = np.arange(24, dtype=float).reshape(2, 2, 2, 3)
    flat = flatten(Tensor(x))
    assert flat.data.shape == (2, 12)
    assert np.array_equal(flat.data[0], x[0].ravel())


def test_encoder_output_shapes_and_determinism():
    spec = EncoderSpec(input_hw=64, conv_channels=(16, 32, 32), scene_width=128, seed=3)
    enc = ConvEncoder(spec)
    frame = np.random.default_rng(4).random((64, 64, 3))
    e1 = enc.encode(frame)
    e2 = enc.encode(frame)
    assert e1.scene.shape == (128,)
    assert e1.spatial.shape == (8, 8, 32)
    assert np.array_equal(e1.scene, e2.scene)
    assert np.array_equal(e1.spatial, e2.spatial)


def test_encoder_black_frame_finite():
    enc = ConvEncoder(EncoderSpec(seed=5))
    e = enc.encode(np.zeros((64, 64, 3)))
    assert np.all(np.isfinite(e.scene)) and np.all(np.isfinite(e.spatial))


def test_encoder_input_validation():
    enc = ConvEncoder(EncoderSpec(seed=6))
    with pytest.raises(InputError):
        enc.encode(np.zeros((32, 32, 3)))
    with pytest.raises(InputError):
        enc.encode(np.full((64, 64, 3), 2.0))


def test_encoder_same_seed_same_hash():
    a = ConvEncoder(EncoderSpec(seed=7))
    b = ConvEncoder(EncoderSpec(seed=7))
    c = ConvEncoder(EncoderSpec(seed=8))
    assert a.weight_hash() == b.weight_hash()
    assert a.weight_hash() != c.weight_hash()


@pytest.fixture(scope="module")
def trained():
    bank = ImageBank(size=64, n_classes=4, train_per_class=40, val_per_class=10, seed=1)
    images, labels = bank.classification_arrays("train")
    spec = EncoderSpec(input_hw=64, conv_channels=(8, 16, 16), scene_width=64, n_classes=4, seed=1)
    enc = ConvEncoder(spec)
    enc.pretrain(images, labels, epochs=6, batch_size=16, lr=1e-3)
    return bank, enc


@pytest.mark.slow
def test_pretrain_heldout_accuracy(trained):
    bank, enc = trained
    images, labels = bank.classification_arrays("val")
    assert enc.evaluate(images, labels) > 0.9


@pytest.mark.slow
def test_pretrained_scene_distances_separate_classes(trained):
    bank, enc = trained
    rng = np.random.default_rng(9)
    scenes = {
        cid: [enc.encode(img.pixels).scene for img in bank.pools[(cid, "val")]]
        for cid in range(4)
    }
    same, diff = [], []
    for _ in range(100):
        a, b = rng.integers(4, size=2)
        ia, ib = rng.integers(10, size=2)
        d = float(np.linalg.norm(scenes[a][ia] - scenes[b][ib]))
        (same if a == b and ia != ib else diff).append(d)
    assert np.mean(same) < np.mean(diff)


@pytest.mark.slow
def test_freeze_discards_head_and_tags_provenance(trained):
    _, enc = trained
    enc.freeze()
    assert enc.frozen
    assert "head_w" not in enc.params
    assert enc.spec.provenance == "pretrained-frozen"
    before = enc.weight_hash()
    frame = np.random.default_rng(10).random((64, 64, 3))
    enc.encode(frame)
    assert enc.weight_hash() == before
    with pytest.raises(ConfigurationError):
        enc.pretrain(np.zeros((4, 64, 64, 3)), np.arange(4))


def test_zero_epoch_pretrain_is_random_frozen():
    bank = ImageBank(size=64, n_classes=2, train_per_class=4, val_per_class=2, seed=2)
    images, labels = bank.classification_arrays("train")
    spec = EncoderSpec(conv_channels=(4, 8, 8), scene_width=32, n_classes=2, seed=11)
    enc = pretrain_frozen_encoder(spec, images, labels, epochs=0)
    assert enc.frozen and enc.spec.provenance == "random-frozen"
    ref = ConvEncoder(EncoderSpec(conv_channels=(4, 8, 8), scene_width=32, n_classes=2, seed=11))
    ref.freeze()
    assert enc.weight_hash() == ref.weight_hash()


def test_single_class_dataset_rejected():
    spec = EncoderSpec(conv_channels=(4, 8, 8), scene_width=32, n_classes=2, seed=12)
    with pytest.raises(InputError):
        pretrain_frozen_encoder(spec, np.zeros((4, 64, 64, 3)), np.zeros(4, dtype=int))


def test_checkpoint_round_trip(tmp_path):
    enc = ConvEncoder(EncoderSpec(conv_channels=(4, 8, 8), scene_width=32, seed=13))
    enc.freeze()
    path = tmp_path / "enc.npz"
    enc.save(path)
    loaded = ConvEncoder.load(path)
    assert loaded.frozen
    assert loaded.weight_hash() == enc.weight_hash()
    assert loaded.spec == enc.spec
    frame = np.random.default_rng(14).random((64, 64, 3))
    assert np.array_equal(loaded.encode(frame).scene, enc.encode(frame).scene)


def test_encode_cached_returns_same_object():
    enc = ConvEncoder(EncoderSpec(conv_channels=(4, 8, 8), scene_width=32, seed=15))
    frame = np.random.default_rng(16).random((64, 64, 3))
    a = enc.encode_cached(frame, "digest-1")
    b = enc.encode_cached(frame, "digest-1")
    assert a is b
