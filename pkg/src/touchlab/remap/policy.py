"""Reward-map policy: subsample, normalize, distribution, variance argmax.

Each candidate action gets k_f predicted-reward values (sigmoid of the module
logits). Per horizon column the map is shifted so its minimum is exactly zero,
converted to a probability distribution by a positive family f, and the column
whose probability values have the largest variance is sampled from. A flat
map therefore contributes nothing: it collapses to uniform with variance zero.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, InputError

logger = logging.getLogger("touchlab.remap")


@dataclass(frozen=True)
class PolicyConfig:
    """Candidate count, distribution family, and minibatch settings."""

    n_candidates: int = 512
    family: str = "identity"  # identity | boltzmann
    temperature: float = 0.01
    tie_break: str = "lowest"
    batch_size: int = 32
    boltzmann_literal_sign: bool = False

    def __post_init__(self):
        if self.n_candidates < 2:
            raise ConfigurationError("need at least two candidate actions")
        if self.family not in ("identity", "boltzmann"):
            raise ConfigurationError(f"unknown distribution family {self.family!r}")
        if self.family == "boltzmann" and not self.temperature > 0:
            raise ConfigurationError("boltzmann temperature must be positive")
        if self.tie_break != "lowest":
            raise ConfigurationError("the only tie-break rule is 'lowest'")
        if self.batch_size < 1:
            raise ConfigurationError("batch size must be positive")


@dataclass
class RewardMapSample:
    """One policy evaluation: candidates, raw logits, per-map distributions."""

    candidates: np.ndarray  # (N, 2) pixel coordinates
    logits: np.ndarray  # (N, k_f)
    probabilities: np.ndarray  # (N, k_f), each column sums to 1
    chosen_map: int
    chosen_index: int


@dataclass
class PendingPrediction:
    """A issued prediction waiting for its k_f realized rewards."""

    step: int
    action: tuple  # (x, y) pixel
    logits: np.ndarray  # (k_f,) stored logits for the chosen action
    visual: object  # input snapshot for the training replay
    action_row: np.ndarray  # (1, action_width)
    targets: list = field(default_factory=list)
    k_f: int = 2

    def __post_init__(self):
        if not self.targets:
            self.targets = [None] * self.k_f

    def retire(self, offset: int, reward: float):
        if not 0 <= offset < self.k_f:
            raise InputError(f"offset {offset} outside horizon")
        if self.targets[offset] is not None:
            raise InputError(f"offset {offset} already retired")
        self.targets[offset] = float(reward)

    @property
    def complete(self) -> bool:
        return all(t is not None for t in self.targets)


def subsample_actions(n: int, rng, size: int) -> np.ndarray:
    """n distinct pixels drawn uniformly from the size x size grid."""
    cells = size * size
    if n < 2:
        raise InputError("need at least two candidates")
    if n > cells:
        raise InputError(f"cannot draw {n} distinct actions from {cells} cells")
    flat = rng.choice(cells, size=n, replace=False)
    return np.stack([flat % size, flat // size], axis=1)


def normalize_map(values: np.ndarray) -> np.ndarray:
    """Shift so the minimum is exactly zero."""
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InputError("map values must be finite")
    return values - values.min()


def distify(values: np.ndarray, family="identity", temperature=0.01, literal_sign=False):
    """Non-negative map values to a probability vector under the family f."""
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise InputError("distify expects non-negative values")
    if family == "identity":
        weights = values
    elif family == "boltzmann":
        signed = -values if literal_sign else values
        weights = np.exp((signed - signed.max()) / temperature)
    else:
        raise ConfigurationError(f"unknown distribution family {family!r}")
    total = weights.sum()
    if total <= 0.0:
        logger.info("flat map: falling back to the uniform distribution")
        return np.full(values.shape, 1.0 / values.size)
    return weights / total


def var_argmax(distributions) -> int:
    """Index of the distribution whose probability values vary the most."""
    if len(distributions) < 1:
        raise InputError("need at least one distribution")
    variances = [float(np.var(np.asarray(d, dtype=np.float64))) for d in distributions]
    return int(np.argmax(variances))


def reward_maps(logits: np.ndarray, policy: PolicyConfig):
    """Per-column Norm then Dist over sigmoid map values; returns (N, k_f)."""
    maps = 1.0 / (1.0 + np.exp(-np.asarray(logits, dtype=np.float64)))
    cols = []
    for j in range(maps.shape[1]):
        normed = normalize_map(maps[:, j])
        cols.append(
            distify(
                normed,
                family=policy.family,
                temperature=policy.temperature,
                literal_sign=policy.boltzmann_literal_sign,
            )
        )
    return np.stack(cols, axis=1)


def choose_action(module, buffers, policy: PolicyConfig, rng, step: int = 0):
    """Full pipeline: subsample, forward, per-map distributions, sample."""
    size = buffers.size
    candidates = subsample_actions(policy.n_candidates, rng, size)
    action_rows = buffers.action_rows(candidates)
    visual = buffers.visual_input(module.config)
    logits = module.predict(visual, action_rows)
    probabilities = reward_maps(logits, policy)
    chosen_map = var_argmax([probabilities[:, j] for j in range(probabilities.shape[1])])
    chosen_index = int(rng.choice(len(candidates), p=probabilities[:, chosen_map]))
    pixel = (int(candidates[chosen_index, 0]), int(candidates[chosen_index, 1]))
    sample = RewardMapSample(candidates, logits, probabilities, chosen_map, chosen_index)
    pending = PendingPrediction(
        step=step,
        action=pixel,
        logits=logits[chosen_index].copy(),
        visual=buffers.visual_snapshot(module.config),
        action_row=action_rows[chosen_index : chosen_index + 1].copy(),
        k_f=logits.shape[1],
    )
    return pixel, sample, pending


def full_grid_maps(module, buffers, size: int) -> np.ndarray:
    """Evaluate every pixel; returns (size, size, k_f) sigmoid map values."""
    xs, ys = np.meshgrid(np.arange(size), np.arange(size))
    candidates = np.stack([xs.ravel(), ys.ravel()], axis=1)
    rows = buffers.action_rows(candidates)
    logits = module.predict(buffers.visual_input(module.config), rows)
    maps = 1.0 / (1.0 + np.exp(-logits))
    return maps.reshape(size, size, -1)
