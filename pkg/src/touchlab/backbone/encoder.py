"""The frozen visual encoder.

A small conv net is pretrained on synthetic image classification, then frozen
and beheaded; thereafter it is a fixed feature map. encode() returns both the
dense scene vector (the module input) and the last conv grid (for the
convolutional bottleneck family). Encoding is pure: same pixels, same output.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .. import checkpoint as ckpt
from ..diffcore import Adam, Parameter, no_grad, relu, softmax_cross_entropy, t_mean
from ..diffcore.tensor import Tensor, matmul, add
from ..errors import ConfigurationError, InputError, TrainingError
from .conv import conv2d, flatten, maxpool2

CHECKPOINT_KIND = "encoder"


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture and provenance of a visual encoder."""

    input_hw: int = 64
    conv_channels: tuple = (16, 32, 32)
    scene_width: int = 128
    scene_activation: str = "raw"  # scene vector before ("raw") or after ("relu") rectification
    n_classes: int = 8
    seed: int = 0
    provenance: str = "untrained"

    def __post_init__(self):
        if self.scene_activation not in ("raw", "relu"):
            raise ConfigurationError(f"unknown scene_activation {self.scene_activation!r}")
        if self.input_hw % (2 ** len(self.conv_channels)) != 0:
            raise ConfigurationError("input size must be divisible by 2^n_stages")

    @property
    def spatial_hw(self) -> int:
        return self.input_hw // (2 ** len(self.conv_channels))

    @property
    def spatial_channels(self) -> int:
        return self.conv_channels[-1]

    def to_dict(self):
        d = self.__dict__.copy()
        d["conv_channels"] = list(self.conv_channels)
        return d

    @staticmethod
    def from_dict(d):
        d = dict(d)
        d["conv_channels"] = tuple(d["conv_channels"])
        return EncoderSpec(**d)


@dataclass
class Encoding:
    """Features for one frame: dense scene vector plus the last conv grid."""

    scene: np.ndarray  # (scene_width,)
    spatial: np.ndarray  # (h, w, C)
    digest: str = field(default="", repr=False)


class ConvEncoder:
    def __init__(self, spec: EncoderSpec):
        self.spec = spec
        self.frozen = False
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xB0DE]))
        self.params = {}
        cin = 3
        for i, cout in enumerate(spec.conv_channels):
            fan_in = 9 * cin
            self.params[f"conv{i}_w"] = Parameter(
                rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(3, 3, cin, cout)), f"conv{i}_w"
            )
            self.params[f"conv{i}_b"] = Parameter(np.zeros(cout), f"conv{i}_b")
            cin = cout
        flat = spec.spatial_hw * spec.spatial_hw * spec.spatial_channels
        self.params["dense_w"] = Parameter(
            rng.normal(0.0, np.sqrt(2.0 / flat), size=(flat, spec.scene_width)), "dense_w"
        )
        self.params["dense_b"] = Parameter(np.zeros(spec.scene_width), "dense_b")
        self.params["head_w"] = Parameter(
            rng.normal(0.0, np.sqrt(2.0 / spec.scene_width), size=(spec.scene_width, spec.n_classes)),
            "head_w",
        )
        self.params["head_b"] = Parameter(np.zeros(spec.n_classes), "head_b")
        self._cache = {}
        self._cache_cap = 4096

    def _features(self, x: Tensor):
        h = x
        for i in range(len(self.spec.conv_channels)):
            h = maxpool2(relu(conv2d(h, self.params[f"conv{i}_w"].tensor, self.params[f"conv{i}_b"].tensor)))
        spatial = h
        scene = add(matmul(flatten(h), self.params["dense_w"].tensor), self.params["dense_b"].tensor)
        if self.spec.scene_activation == "relu":
            scene = relu(scene)
        return spatial, scene

    def encode(self, pixels: np.ndarray) -> Encoding:
        """Features for one frame. pixels: (H, W, 3) in [0, 1]."""
        hw = self.spec.input_hw
        if pixels.shape != (hw, hw, 3):
            raise InputError(f"expected ({hw}, {hw}, 3) pixels, got {pixels.shape}")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise InputError("pixel values must lie in [0, 1]")
        with no_grad():
            spatial, scene = self._features(Tensor(pixels[None]))
        return Encoding(scene=scene.data[0], spatial=spatial.data[0])

    def encode_cached(self, pixels: np.ndarray, digest: str) -> Encoding:
        """encode() memoized on a caller-supplied content digest of the pixels."""
        hit = self._cache.get(digest)
        if hit is not None:
            return hit
        enc = self.encode(pixels)
        enc.digest = digest
        if len(self._cache) >= self._cache_cap:
            self._cache.pop(next(iter(self._cache)))
        self._cache[digest] = enc
        return enc

    def pretrain(self, images, labels, epochs=8, batch_size=32, lr=1e-3, rng=None, val_fraction=0.1):
        """Supervised classification pretraining. Returns per-epoch mean losses."""
        if self.frozen:
            raise ConfigurationError("encoder is frozen; cannot pretrain")
        images = np.asarray(images, dtype=np.float64)
        labels = np.asarray(labels)
        if rng is None:
            rng = np.random.default_rng(np.random.SeedSequence([self.spec.seed, 0x7A]))
        n = len(images)
        n_val = max(1, int(n * val_fraction))
        perm = rng.permutation(n)
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        opt = Adam([(list(self.params.values()), lr)])
        history = []
        for epoch in range(epochs):
            order = rng.permutation(train_idx)
            losses = []
            for lo in range(0, len(order), batch_size):
                idx = order[lo : lo + batch_size]
                spatial, scene = self._features(Tensor(images[idx]))
                logits = add(matmul(relu(scene), self.params["head_w"].tensor), self.params["head_b"].tensor)
                loss = t_mean(softmax_cross_entropy(logits, labels[idx]))
                if not np.isfinite(loss.data):
                    raise TrainingError(f"non-finite pretraining loss at epoch {epoch}")
                opt.zero_grad()
                loss.backward()
                opt.step()
                losses.append(float(loss.data))
            history.append(float(np.mean(losses)))
        self._val_accuracy = self.evaluate(images[val_idx], labels[val_idx])
        self._pretrained = True
        return history

    def evaluate(self, images, labels) -> float:
        """Held-out classification accuracy through the (still attached) head."""
        with no_grad():
            _, scene = self._features(Tensor(np.asarray(images, dtype=np.float64)))
            logits = add(matmul(relu(scene), self.params["head_w"].tensor), self.params["head_b"].tensor)
        return float((logits.data.argmax(axis=1) == np.asarray(labels)).mean())

    def freeze(self):
        """Drop the classification head and fix all remaining weights."""
        self.params.pop("head_w", None)
        self.params.pop("head_b", None)
        for p in self.params.values():
            p.freeze()
        self.frozen = True
        tag = "pretrained-frozen" if getattr(self, "_pretrained", False) else "random-frozen"
        self.spec = dataclasses.replace(self.spec, provenance=tag)
        self._cache.clear()
        return self

    def weight_hash(self) -> str:
        return ckpt.weight_hash({k: p.data for k, p in self.params.items()})

    def save(self, path) -> str:
        spec = self.spec.to_dict()
        spec["frozen"] = self.frozen
        return ckpt.save_checkpoint(
            path, CHECKPOINT_KIND, spec, {k: p.data for k, p in self.params.items()}
        )

    @staticmethod
    def load(path) -> "ConvEncoder":
        _, spec, arrays, _ = ckpt.load_checkpoint(path, expect_kind=CHECKPOINT_KIND)
        frozen = spec.pop("frozen", False)
        enc = ConvEncoder(EncoderSpec.from_dict(spec))
        if frozen:
            enc.params.pop("head_w", None)
            enc.params.pop("head_b", None)
        for k in list(enc.params):
            if k not in arrays:
                raise ConfigurationError(f"checkpoint missing array {k!r}")
            enc.params[k].data = arrays[k]
        enc._pretrained = enc.spec.provenance == "pretrained-frozen"
        if frozen:
            enc.freeze()
        return enc


def pretrain_frozen_encoder(spec, images, labels, epochs=8, batch_size=32, lr=1e-3, rng=None):
    """Build, pretrain, and freeze an encoder in one call.

    epochs=0 keeps the seeded random initialization (random-frozen control).
    """
    if len(set(int(c) for c in labels)) < 2:
        raise InputError("pretraining needs at least two classes")
    enc = ConvEncoder(spec)
    if epochs > 0:
        enc.pretrain(images, labels, epochs=epochs, batch_size=batch_size, lr=lr, rng=rng)
    return enc.freeze()
