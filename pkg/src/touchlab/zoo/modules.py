"""Reward-map module construction.

A module maps (visual input, N candidate actions) to an N x k_f grid of
reward logits. Early-bottleneck variants compress the visual vector before it
meets the action rows; late variants concatenate the raw visual vector with
the actions directly. The convolutional variant runs a shallow 1x1-conv
bottleneck over the backbone's spatial grid (scene vector tiled onto the
channel axis) before joining the same downstream stack.

The first post-concatenation layer is evaluated as a split affine: the visual
half of its weight matrix is applied once and the result broadcast across
candidates, which is algebraically identical to concatenation but avoids
materializing N copies of the visual features.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import checkpoint as ckpt
from ..diffcore import Parameter, no_grad
from ..diffcore.nonlin import WIDTH_FACTOR, apply_activation
from ..diffcore.tensor import Tensor, add, concat, matmul, reshape, slice_axis, tile_rows
from ..errors import ConfigurationError, InputError
from .arch import (
    TASK_FAMILY_WIDTHS,
    ArchitectureId,
    bottleneck_activation,
    downstream_activation,
    parse_architecture,
    task_family,
)

CHECKPOINT_KIND = "module"


@dataclass(frozen=True)
class ModuleConfig:
    """Shapes, horizons, and init parameters for one reward-map module."""

    arch: str = "ems"
    widths: tuple = (8, 8, 8)
    k_b: int = 1
    k_f: int = 2
    scene_width: int = 128
    init_sigma: float = 0.01
    seed: int = 0
    conv: bool = False
    spatial_hw: int = 8
    spatial_channels: int = 32
    conv_widths: tuple = (128, 128, 128)

    def __post_init__(self):
        arch = parse_architecture(self.arch)
        if not self.widths or any(n <= 0 for n in self.widths):
            raise ConfigurationError("layer widths must be positive")
        if self.k_b < 0:
            raise ConfigurationError("k_b must be >= 0")
        if self.k_f < 1:
            raise ConfigurationError("k_f must be >= 1")
        if arch.bottleneck == "early" and len(self.widths) < 2:
            raise ConfigurationError("early-bottleneck modules need a downstream layer")
        if self.conv and arch.name != "ems":
            raise ConfigurationError("the convolutional bottleneck is an ems variant")
        if self.conv and len(self.conv_widths) != 3:
            raise ConfigurationError("conv bottleneck is one tanh plus two cres stages")

    @property
    def architecture(self) -> ArchitectureId:
        return parse_architecture(self.arch)

    @property
    def visual_width(self) -> int:
        """Scene history plus one validity bit per history slot."""
        return (self.k_b + 1) * (self.scene_width + 1)

    @property
    def action_width(self) -> int:
        """k_b executed actions (x, y, validity) plus the candidate (x, y)."""
        return 3 * self.k_b + 2

    def to_dict(self):
        d = self.__dict__.copy()
        d["widths"] = list(self.widths)
        d["conv_widths"] = list(self.conv_widths)
        return d

    @staticmethod
    def from_dict(d):
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        d["conv_widths"] = tuple(d["conv_widths"])
        return ModuleConfig(**d)


def count_parameters(config: ModuleConfig) -> int:
    """Parameter count from layer shapes alone (weights plus biases)."""
    arch = config.architecture
    dact = downstream_activation(arch)
    total = 0
    if config.conv:
        cin = config.spatial_channels + (config.k_b + 1) * config.scene_width
        c_tanh, c1, c2 = config.conv_widths
        total += cin * c_tanh + c_tanh
        total += c_tanh * c1 + c1
        total += c1 * WIDTH_FACTOR["cres"] * c2 + c2
        vis = config.spatial_hw**2 * c2 * WIDTH_FACTOR["cres"] + (config.k_b + 1)
        downstream = config.widths
    elif arch.bottleneck == "early":
        bact = bottleneck_activation(arch)
        n0 = config.widths[0]
        total += config.visual_width * n0 + n0
        vis = n0 * WIDTH_FACTOR[bact]
        downstream = config.widths[1:]
    else:
        vis = config.visual_width
        downstream = config.widths
    cur = vis + config.action_width
    for n in downstream:
        total += cur * n + n
        cur = n * WIDTH_FACTOR[dact]
    total += cur * config.k_f + config.k_f
    return total


class ReMaPModule:
    """An ordered stage list over named Parameters; see the module docstring."""

    def __init__(self, config: ModuleConfig, rng=None):
        self.config = config
        self.frozen = False
        arch = config.architecture
        self.bact = bottleneck_activation(arch) if (arch.bottleneck == "early" and not config.conv) else None
        self.dact = downstream_activation(arch)
        if rng is None:
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x30D]))
        self.params = {}

        def param(name, shape):
            p = Parameter(rng.normal(0.0, config.init_sigma, size=shape), name)
            self.params[name] = p
            return p

        self.output_widths = []
        if config.conv:
            cin = config.spatial_channels + (config.k_b + 1) * config.scene_width
            for j, (cw, a) in enumerate(zip(config.conv_widths, ("tanh", "cres", "cres"))):
                param(f"conv{j}_w", (cin, cw))
                param(f"conv{j}_b", (cw,))
                cin = cw * WIDTH_FACTOR[a]
                self.output_widths.append(cin)
            vis = config.spatial_hw**2 * cin + (config.k_b + 1)
            downstream = config.widths
        elif arch.bottleneck == "early":
            n0 = config.widths[0]
            param("w0", (config.visual_width, n0))
            param("b0", (n0,))
            vis = n0 * WIDTH_FACTOR[self.bact]
            self.output_widths.append(vis)
            downstream = config.widths[1:]
        else:
            vis = config.visual_width
            downstream = config.widths
        self._first_visual_width = vis
        cur = vis + config.action_width
        for i, n in enumerate(downstream, start=1):
            param(f"w{i}", (cur, n))
            param(f"b{i}", (n,))
            cur = n * WIDTH_FACTOR[self.dact]
            self.output_widths.append(cur)
        self._n_downstream = len(downstream)
        param("w_out", (cur, config.k_f))
        param("b_out", (config.k_f,))
        self.output_widths.append(config.k_f)

    def n_params(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    def trainable_params(self):
        return [p for p in self.params.values() if p.trainable]

    def _visual_row(self, visual) -> Tensor:
        cfg = self.config
        if cfg.conv:
            try:
                spatial, scenes, valid = visual
            except (TypeError, ValueError):
                raise InputError("conv module expects (spatial, scene history, validity)")
            spatial = np.asarray(spatial, dtype=np.float64)
            scenes = np.asarray(scenes, dtype=np.float64)
            valid = np.asarray(valid, dtype=np.float64)
            hw = cfg.spatial_hw
            if spatial.shape != (hw, hw, cfg.spatial_channels):
                raise InputError(f"spatial grid shape {spatial.shape} does not match config")
            if scenes.shape != (cfg.k_b + 1, cfg.scene_width):
                raise InputError(f"scene history shape {scenes.shape} does not match config")
            if valid.shape != (cfg.k_b + 1,):
                raise InputError(f"validity shape {valid.shape} does not match config")
            pixels = hw * hw
            tiled = concat(
                [
                    Tensor(spatial.reshape(pixels, cfg.spatial_channels)),
                    tile_rows(Tensor(scenes.reshape(1, -1)), pixels),
                ]
            )
            h = tiled
            for j, a in enumerate(("tanh", "cres", "cres")):
                z = add(matmul(h, self.params[f"conv{j}_w"].tensor), self.params[f"conv{j}_b"].tensor)
                h = apply_activation(a, z)
            vec = reshape(h, (1, pixels * h.data.shape[1]))
            return concat([vec, Tensor(valid.reshape(1, -1))])
        visual = np.asarray(visual, dtype=np.float64).reshape(-1)
        if visual.shape[0] != cfg.visual_width:
            raise InputError(f"visual width {visual.shape[0]}, expected {cfg.visual_width}")
        row = Tensor(visual[None])
        if self.bact is not None:
            z = add(matmul(row, self.params["w0"].tensor), self.params["b0"].tensor)
            return apply_activation(self.bact, z)
        return row

    @property
    def has_visual_stage(self) -> bool:
        """True when the first stage consumes only the visual input."""
        return self.config.conv or self.bact is not None

    def stage_count(self) -> int:
        return int(self.has_visual_stage) + self._n_downstream + 1

    def stage_widths(self) -> list:
        """Output width of every stage, visual stage through readout."""
        if self.config.conv:
            return [self._first_visual_width] + self.output_widths[3:]
        return list(self.output_widths)

    def apply_stage(self, idx: int, prev, visual, actions) -> Tensor:
        """One stage on an arbitrary previous activation (for mixtures).

        Stages are: the visual bottleneck (early/conv only), the action-merge
        layer, further hidden layers, and the affine readout. `prev` is the
        previous stage's output; the merge stage also consumes the action rows
        (array or graph tensor), the visual stage only the visual input.
        """
        cfg = self.config
        merge = 1 if self.has_visual_stage else 0
        if idx == merge:
            a_t = actions if isinstance(actions, Tensor) else Tensor(
                np.asarray(actions, dtype=np.float64)
            )
            n = a_t.data.shape[0]
            row = prev if merge == 1 else self._visual_row(visual)
            dv = self._first_visual_width
            w1 = self.params["w1"].tensor
            wv = slice_axis(w1, 0, dv, axis=0)
            wa = slice_axis(w1, dv, dv + cfg.action_width, axis=0)
            z = add(
                add(tile_rows(matmul(row, wv), n), matmul(a_t, wa)),
                self.params["b1"].tensor,
            )
            return apply_activation(self.dact, z)
        if idx == 0:
            return self._visual_row(visual)
        layer = idx - merge + 1
        if layer <= self._n_downstream:
            z = add(matmul(prev, self.params[f"w{layer}"].tensor), self.params[f"b{layer}"].tensor)
            return apply_activation(self.dact, z)
        return add(matmul(prev, self.params["w_out"].tensor), self.params["b_out"].tensor)

    def forward(self, visual, actions) -> Tensor:
        """Reward logits for every candidate row: (N, k_f)."""
        cfg = self.config
        actions = np.asarray(actions, dtype=np.float64)
        if actions.ndim != 2 or actions.shape[1] != cfg.action_width:
            raise InputError(f"action rows must be (N, {cfg.action_width}), got {actions.shape}")
        h = None
        for idx in range(self.stage_count()):
            h = self.apply_stage(idx, h, visual, actions)
        return h

    def predict(self, visual, actions) -> np.ndarray:
        """forward() without graph construction; returns a plain array."""
        with no_grad():
            return self.forward(visual, actions).data

    def freeze(self):
        for p in self.params.values():
            p.freeze()
        self.frozen = True
        return self

    def weight_hash(self) -> str:
        return ckpt.weight_hash({k: p.data for k, p in self.params.items()})

    def save(self, path) -> str:
        spec = self.config.to_dict()
        spec["frozen"] = self.frozen
        return ckpt.save_checkpoint(
            path, CHECKPOINT_KIND, spec, {k: p.data for k, p in self.params.items()}
        )

    @staticmethod
    def load(path) -> "ReMaPModule":
        _, spec, arrays, _ = ckpt.load_checkpoint(path, expect_kind=CHECKPOINT_KIND)
        frozen = spec.pop("frozen", False)
        module = ReMaPModule(ModuleConfig.from_dict(spec))
        for k in list(module.params):
            if k not in arrays:
                raise ConfigurationError(f"checkpoint missing array {k!r}")
            module.params[k].data = arrays[k]
        if frozen:
            module.freeze()
        return module


def build_ems(config: ModuleConfig, rng=None) -> ReMaPModule:
    """The early-bottleneck multiplicative-symmetric module."""
    arch = config.architecture
    if arch.activation != "cres" or arch.bottleneck != "early":
        raise ConfigurationError(f"build_ems requires the ems architecture, got {config.arch!r}")
    return ReMaPModule(config, rng)


def build_ablation(config: ModuleConfig, rng=None) -> ReMaPModule:
    """Any architecture in the registry, ablated or not."""
    if config.conv:
        raise ConfigurationError("use build_conv_ems for the convolutional variant")
    return ReMaPModule(config, rng)


def build_conv_ems(config: ModuleConfig, encoder_spec=None, rng=None) -> ReMaPModule:
    """The convolutional-bottleneck ems variant over the backbone's spatial map."""
    if not config.conv:
        raise ConfigurationError("build_conv_ems requires conv=True")
    if encoder_spec is not None:
        if (
            encoder_spec.spatial_hw != config.spatial_hw
            or encoder_spec.spatial_channels != config.spatial_channels
            or encoder_spec.scene_width != config.scene_width
        ):
            raise ConfigurationError(
                "module config does not match the encoder's spatial map or scene width"
            )
    return ReMaPModule(config, rng)


def build_module(config: ModuleConfig, rng=None) -> ReMaPModule:
    if config.conv:
        return build_conv_ems(config, rng=rng)
    return ReMaPModule(config, rng)


def _ems_reference_config(task: str, scene_width: int, k_b: int, k_f: int) -> ModuleConfig:
    w = TASK_FAMILY_WIDTHS[task_family(task)]["ems"]
    return ModuleConfig(arch="ems", widths=(w, w, w), k_b=k_b, k_f=k_f, scene_width=scene_width)


def small_late_widths(arch_name: str, task: str, scene_width=128, k_b=1, k_f=2) -> tuple:
    """Width search: match the early-bottleneck parameter count within 5%.

    Searches a uniform width first, then lets the first hidden layer differ by
    a few units for finer granularity (its count step is the smallest).
    """
    arch = parse_architecture(arch_name)
    if arch.size_class != "small":
        raise ConfigurationError(f"{arch_name!r} is not a small size class")
    target = count_parameters(_ems_reference_config(task, scene_width, k_b, k_f))

    def count(widths):
        cfg = ModuleConfig(
            arch=arch_name, widths=widths, k_b=k_b, k_f=k_f, scene_width=scene_width
        )
        return count_parameters(cfg)

    best, best_err = None, None
    for w in range(1, 2049):
        err = abs(count((w, w, w)) - target)
        if best_err is None or err < best_err:
            best, best_err = (w, w, w), err
        elif count((w, w, w)) > target:
            break
    base = best[1]
    for w1 in range(max(1, base - 4), base + 5):
        widths = (w1, base, base)
        err = abs(count(widths) - target)
        if err < best_err:
            best, best_err = widths, err
    if best_err / target > 0.05:
        raise ConfigurationError(
            f"no width matches the reference parameter count within 5% for {arch_name!r}"
        )
    return best


def widths_for(arch_name: str, task: str, scene_width=128, k_b=1, k_f=2) -> tuple:
    """Units per layer for (architecture, task), per the size-class tables."""
    arch = parse_architecture(arch_name)
    if arch.size_class == "small":
        return small_late_widths(arch_name, task, scene_width, k_b, k_f)
    w = TASK_FAMILY_WIDTHS[task_family(task)][arch.size_class]
    return (w, w, w)
