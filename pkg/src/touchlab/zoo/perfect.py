"""The analytic reward predictor for the binary stimulus-response task.

With a linear boundary w over scene features, the quantity

    s = ReLU(w . psi) ReLU(a_x) + ReLU(-w . psi) ReLU(-a_x)

is positive exactly when the touched side matches the class side, so a hard
threshold H(s) (H(0) = 0) is a perfect reward predictor. The module exposes
smooth logits scale*s - offset so the same policy/loss machinery applies; the
always-rewarded next-step column is the constant logit scale.

The same function is realizable as a two-layer early-bottleneck module: the
bottleneck carries p = w . psi through both rectified signs, the first stack
layer forms u1 = p + a_x and u2 = p - a_x, and the squared units recover the
product via the quarter-square identity p*a_x = (u1^2 - u2^2) / 4.
"""

import numpy as np

from ..diffcore.tensor import Tensor
from ..errors import InputError, TrainingError
from .modules import ModuleConfig, ReMaPModule

LOGIT_SCALE = 30.0
LOGIT_OFFSET = 3.0


def normalize_coord(i: int, size: int) -> float:
    """Pixel index to a center-relative coordinate in (-1, 1), never 0."""
    return ((i + 0.5) - size / 2.0) / (size / 2.0)


def predict_reward(w, psi, action, size) -> float:
    """Hard-threshold reward prediction for a touch at pixel action=(x, y)."""
    p = float(np.dot(np.asarray(w).reshape(-1), np.asarray(psi).reshape(-1)))
    ax = normalize_coord(int(action[0]), size)
    s = max(p, 0.0) * max(ax, 0.0) + max(-p, 0.0) * max(-ax, 0.0)
    return 1.0 if s > 0.0 else 0.0


class PerfectSRModule:
    """Analytic module with the same forward contract as a learned one."""

    def __init__(self, w, config: ModuleConfig, scale=LOGIT_SCALE, offset=LOGIT_OFFSET):
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        if w.shape[0] != config.scene_width:
            raise InputError(f"boundary width {w.shape[0]}, expected {config.scene_width}")
        self.w = w
        self.config = config
        self.scale = scale
        self.offset = offset
        self.frozen = True
        self.params = {}

    def trainable_params(self):
        return []

    def forward(self, visual, actions) -> Tensor:
        cfg = self.config
        visual = np.asarray(visual, dtype=np.float64).reshape(-1)
        if visual.shape[0] != cfg.visual_width:
            raise InputError(f"visual width {visual.shape[0]}, expected {cfg.visual_width}")
        actions = np.asarray(actions, dtype=np.float64)
        if actions.ndim != 2 or actions.shape[1] != cfg.action_width:
            raise InputError(f"action rows must be (N, {cfg.action_width}), got {actions.shape}")
        psi_now = visual[cfg.k_b * cfg.scene_width : (cfg.k_b + 1) * cfg.scene_width]
        p = float(np.dot(self.w, psi_now))
        ax = actions[:, 3 * cfg.k_b]
        s = np.maximum(p, 0.0) * np.maximum(ax, 0.0) + np.maximum(-p, 0.0) * np.maximum(-ax, 0.0)
        logits = np.empty((actions.shape[0], cfg.k_f))
        logits[:, 0] = self.scale * s - self.offset
        logits[:, 1:] = self.scale
        return Tensor(logits)

    def predict(self, visual, actions) -> np.ndarray:
        return self.forward(visual, actions).data

    def ems_twin(self) -> ReMaPModule:
        return ems_twin_from_boundary(self.w, self.config, self.scale, self.offset)


def perfect_sr_module(w, config: ModuleConfig = None, **kwargs) -> PerfectSRModule:
    if config is None:
        config = ModuleConfig(arch="ems", widths=(1, 2))
    return PerfectSRModule(w, config, **kwargs)


def ems_twin_from_boundary(w, config: ModuleConfig, scale=LOGIT_SCALE, offset=LOGIT_OFFSET):
    """Hand-assigned two-layer module computing scale*(w.psi)*a_x - offset."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    cfg = ModuleConfig(
        arch="ems",
        widths=(1, 2),
        k_b=config.k_b,
        k_f=config.k_f,
        scene_width=config.scene_width,
        seed=config.seed,
    )
    module = ReMaPModule(cfg)
    sw, kb = cfg.scene_width, cfg.k_b
    w0 = np.zeros((cfg.visual_width, 1))
    w0[kb * sw : (kb + 1) * sw, 0] = w
    module.params["w0"].data = w0
    module.params["b0"].data = np.zeros(1)
    # Bottleneck output is [relu(p), relu(-p)]; u1 = p + a_x, u2 = p - a_x.
    w1 = np.zeros((2 + cfg.action_width, 2))
    w1[0] = [1.0, 1.0]
    w1[1] = [-1.0, -1.0]
    w1[2 + 3 * kb] = [1.0, -1.0]
    module.params["w1"].data = w1
    module.params["b1"].data = np.zeros(2)
    # cres([u1, u2]) lays out squares at indices 4..7: u1^2 = [4]+[6], u2^2 = [5]+[7].
    w_out = np.zeros((8, cfg.k_f))
    w_out[4, 0] = scale / 4.0
    w_out[6, 0] = scale / 4.0
    w_out[5, 0] = -scale / 4.0
    w_out[7, 0] = -scale / 4.0
    b_out = np.full(cfg.k_f, scale)
    b_out[0] = -offset
    module.params["w_out"].data = w_out
    module.params["b_out"].data = b_out
    return module.freeze()


def fit_boundary(encoder, bank, negative_class=0, positive_class=1, margin=20.0, max_epochs=1000):
    """A margin-rescaled linear separator over encoder scene vectors.

    Starts from the class-mean difference, runs perceptron sweeps until both
    pools (train and val splits) are fully separated, then rescales so
    min |w . psi| >= margin.
    """
    feats, signs = [], []
    for split in ("train", "val"):
        for cid, sign in ((negative_class, -1.0), (positive_class, 1.0)):
            for img in bank.pools[(cid, split)]:
                feats.append(encoder.encode(img.pixels).scene)
                signs.append(sign)
    feats = np.stack(feats)
    signs = np.asarray(signs)
    w = feats[signs > 0].mean(axis=0) - feats[signs < 0].mean(axis=0)
    for _ in range(max_epochs):
        clean = True
        for x, sign in zip(feats, signs):
            if sign * (x @ w) <= 0:
                w = w + sign * x
                clean = False
        if clean:
            break
    else:
        raise TrainingError("classes are not linearly separable in scene space")
    return w * (margin / np.abs(feats @ w).min())
