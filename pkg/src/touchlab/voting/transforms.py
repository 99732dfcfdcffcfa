"""Targeted transforms riding on a frozen module.

Two small adapters turn an already-learned module into a candidate for reuse
after a task change. The action transform is one linear map on the coordinate
entries of the action rows (validity bits pass through), initialized near the
identity. The reward-map adapter is a two-layer network on the module's
readout: hidden CReS layer over [logits, logits x relu(actions), actions],
then an affine map back to k_f, initialized so the logits pass through almost
unchanged. Both train while the module underneath stays frozen.
"""

import numpy as np

from ..diffcore import Parameter, add, apply_activation, concat, matmul, mul, relu, slice_axis
from ..diffcore.tensor import Tensor
from ..errors import ConfigurationError

ADAPTER_HIDDEN = 4


class ActionTransform:
    """a' = W a + b on the (k_b + 1) coordinate pairs of each action row."""

    def __init__(self, k_b, sigma=0.01, ones_bias=True, rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        self.k_b = k_b
        width = (k_b + 1) * 2
        w = np.eye(width) + rng.normal(0.0, sigma, size=(width, width))
        b = np.ones(width) if ones_bias else np.zeros(width)
        self.w = Parameter(w, "act_w")
        self.b = Parameter(b, "act_b")

    def params(self):
        return [self.w, self.b]

    def __call__(self, actions) -> Tensor:
        a_t = actions if isinstance(actions, Tensor) else Tensor(
            np.asarray(actions, dtype=np.float64)
        )
        k_b = self.k_b
        coords = [slice_axis(a_t, 3 * j, 3 * j + 2) for j in range(k_b)]
        coords.append(slice_axis(a_t, 3 * k_b, 3 * k_b + 2))
        moved = add(matmul(concat(coords), self.w.tensor), self.b.tensor)
        parts = []
        for j in range(k_b):
            parts.append(slice_axis(moved, 2 * j, 2 * j + 2))
            parts.append(slice_axis(a_t, 3 * j + 2, 3 * j + 3))
        parts.append(slice_axis(moved, 2 * k_b, 2 * k_b + 2))
        return concat(parts)


class RewardMapAdapter:
    """Two-layer readout adapter, pseudo-identity at initialization.

    The identity path survives the CReS hidden layer because W2 carries +1 on
    the positive block diagonal and -1 on the negative one, reconstructing
    each logit as relu(z) - relu(-z); eps=0 with zero bias is exact.
    """

    def __init__(self, k_f, action_width, eps=0.001, bias=0.01, rng=None):
        if k_f > ADAPTER_HIDDEN:
            raise ConfigurationError("adapter hidden width cannot carry the identity")
        if rng is None:
            rng = np.random.default_rng(0)
        self.k_f = k_f
        in_width = k_f + k_f * action_width + action_width
        w1 = rng.normal(0.0, eps, size=(in_width, ADAPTER_HIDDEN))
        w1[np.arange(k_f), np.arange(k_f)] += 1.0
        w2 = rng.normal(0.0, eps, size=(4 * ADAPTER_HIDDEN, k_f))
        w2[np.arange(k_f), np.arange(k_f)] += 1.0
        w2[ADAPTER_HIDDEN + np.arange(k_f), np.arange(k_f)] -= 1.0
        self.w1 = Parameter(w1, "adapter_w1")
        self.b1 = Parameter(np.full(ADAPTER_HIDDEN, bias), "adapter_b1")
        self.w2 = Parameter(w2, "adapter_w2")
        self.b2 = Parameter(np.full(k_f, bias), "adapter_b2")

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def __call__(self, logits: Tensor, actions: Tensor) -> Tensor:
        gated = relu(actions)
        crossed = [mul(slice_axis(logits, j, j + 1), gated) for j in range(self.k_f)]
        x = concat([logits] + crossed + [actions])
        hidden = apply_activation("cres", add(matmul(x, self.w1.tensor), self.b1.tensor))
        return add(matmul(hidden, self.w2.tensor), self.b2.tensor)


class TransformCandidate:
    """A frozen module seen through trainable action/readout transforms."""

    def __init__(self, base, controller, rng=None):
        if not base.frozen:
            raise ConfigurationError("transforms attach to a frozen module")
        if rng is None:
            rng = np.random.default_rng(0)
        self.base = base
        cfg = base.config
        self.action = ActionTransform(
            cfg.k_b, sigma=controller.action_sigma, ones_bias=controller.action_ones_bias, rng=rng
        )
        self.adapter = RewardMapAdapter(
            cfg.k_f,
            cfg.action_width,
            eps=controller.adapter_eps,
            bias=controller.adapter_bias,
            rng=rng,
        )
        self._last = base.stage_count() - 1

    @property
    def config(self):
        return self.base.config

    def stage_count(self):
        return self.base.stage_count()

    def stage_widths(self):
        return self.base.stage_widths()

    def trainable_params(self):
        return self.action.params() + self.adapter.params()

    def apply_stage(self, idx, prev, visual, actions):
        merge = 1 if self.base.has_visual_stage else 0
        if idx == self._last:
            moved = self.action(actions)
            logits = self.base.apply_stage(idx, prev, visual, actions)
            return self.adapter(logits, moved)
        if idx == merge:
            return self.base.apply_stage(idx, prev, visual, self.action(actions))
        return self.base.apply_stage(idx, prev, visual, actions)
