"""Mixture-of-modules control by per-layer or per-unit softmax votes.

Given shape-compatible candidate modules, every stage is evaluated on the
shared composite output of the previous stage; a softmax over candidate
scores weights the candidates' stage outputs and the weighted sum feeds the
next stage. Layer mode votes once per stage from the concatenated stage
outputs; unit mode votes separately at every unit from that unit's values
across candidates. Vote parameters start biased toward the old modules in a
column-grouped scheme, with the newest (trainable) module's column getting
its own fixed initialization.
"""

from dataclasses import dataclass

import numpy as np

from ..diffcore import (
    Parameter,
    add,
    concat,
    matmul,
    mul,
    reshape,
    softmax,
    stack_last,
    t_sum,
    unitwise_linear,
)
from ..diffcore.tensor import Tensor, no_grad
from ..errors import ConfigurationError, InputError


@dataclass(frozen=True)
class ControllerConfig:
    """Vote mode, initialization scheme, transform settings, learning rates."""

    mode: str = "layer"  # layer | unit
    mu0: float = 0.01  # old-module weight mean, first stage
    b0: float = 0.1  # old-module bias, first stage
    mu1: float = 0.02  # old-module weight mean, deeper stages
    b1: float = 1.0  # old-module bias, deeper stages
    new_mu: float = 0.01  # new-module weight mean, all stages
    new_b: float = 0.1  # new-module bias, all stages
    sigma: float = 0.001  # vote init noise scale
    use_transforms: bool = True
    action_sigma: float = 0.01
    action_ones_bias: bool = True
    action_lr: float = 0.1
    adapter_eps: float = 0.001
    adapter_bias: float = 0.01
    adapter_lr: float = 0.01
    controller_lr: float = None  # defaults to the module learning rate
    force_one_hot: int = None  # candidate index; disables voting when set
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("layer", "unit"):
            raise ConfigurationError(f"unknown voting mode {self.mode!r}")
        if self.sigma < 0:
            raise ConfigurationError("vote init noise must be non-negative")


class VoteState:
    """Per-stage vote parameters over a fixed candidate list."""

    def __init__(self, mode, stage_widths, n_candidates, weights, biases):
        self.mode = mode
        self.stage_widths = list(stage_widths)
        self.n_candidates = n_candidates
        self.weights = weights
        self.biases = biases

    def params(self):
        return self.weights + self.biases


def init_votes(config: ControllerConfig, stage_widths, n_candidates, rng, n_old=None) -> VoteState:
    """Column-grouped biased initialization: old candidates up, new fixed.

    Entry magnitudes are |Normal(mu, sigma^2)| where mu and the bias depend
    only on the stage (first vs deeper) and on whether the score column
    belongs to one of the first n_old candidates (the intact old modules) or
    to a newly introduced one (transform candidates and the fresh module).
    """
    if n_candidates < 2:
        raise ConfigurationError("voting needs at least two candidates")
    if n_old is None:
        n_old = n_candidates - 1
    if not 0 < n_old < n_candidates:
        raise ConfigurationError(f"n_old {n_old} out of range for {n_candidates} candidates")
    weights, biases = [], []
    for i, width in enumerate(stage_widths):
        mus = np.full(n_candidates, config.mu0 if i == 0 else config.mu1)
        bs = np.full(n_candidates, config.b0 if i == 0 else config.b1)
        mus[n_old:] = config.new_mu
        bs[n_old:] = config.new_b
        if config.mode == "layer":
            w = np.abs(rng.normal(mus, config.sigma, size=(n_candidates * width, n_candidates)))
            b = bs.copy()
        else:
            w = np.abs(rng.normal(mus, config.sigma, size=(width, n_candidates, n_candidates)))
            b = np.tile(bs, (width, 1))
        weights.append(Parameter(w, f"vote{i}_w"))
        biases.append(Parameter(b, f"vote{i}_b"))
    return VoteState(config.mode, stage_widths, n_candidates, weights, biases)


class VotingComposite:
    """Stage-wise softmax mixture over candidates; newest candidate trains."""

    def __init__(self, candidates, votes: VoteState, controller: ControllerConfig):
        if len(candidates) != votes.n_candidates:
            raise ConfigurationError(
                f"{len(candidates)} candidates but votes cover {votes.n_candidates}"
            )
        counts = {c.stage_count() for c in candidates}
        if len(counts) != 1:
            raise ConfigurationError("candidates are not shape-compatible in depth")
        for c in candidates:
            if c.stage_widths() != candidates[0].stage_widths():
                raise ConfigurationError("candidates are not shape-compatible in width")
        if candidates[0].stage_widths() != votes.stage_widths:
            raise ConfigurationError("vote shapes do not match the candidate stages")
        self.candidates = candidates
        self.votes = votes
        self.controller = controller
        self.config = candidates[-1].config
        self.last_votes = None

    def stage_count(self):
        return self.candidates[0].stage_count()

    def _mix(self, i, outs):
        stacked = stack_last(outs)  # (rows, width, candidates)
        if self.votes.mode == "layer":
            scores = add(matmul(concat(outs), self.votes.weights[i].tensor),
                         self.votes.biases[i].tensor)
            p = softmax(scores, axis=-1)  # (rows, candidates)
            p_mean = p.data.mean(axis=0)
            p = reshape(p, (p.data.shape[0], 1, p.data.shape[1]))
        else:
            scores = unitwise_linear(
                stacked, self.votes.weights[i].tensor, self.votes.biases[i].tensor
            )
            p = softmax(scores, axis=-1)  # (rows, width, candidates)
            p_mean = p.data.mean(axis=(0, 1))
        return t_sum(mul(stacked, p), axis=-1), p_mean

    def forward(self, visual, actions) -> Tensor:
        actions = self._check_actions(actions)
        forced = self.controller.force_one_hot
        if forced is not None:
            chosen = self.candidates[forced]
            h = None
            for i in range(chosen.stage_count()):
                h = chosen.apply_stage(i, h, visual, actions)
            self.last_votes = [
                np.eye(len(self.candidates))[forced] for _ in range(self.stage_count())
            ]
            return h
        h = None
        self.last_votes = []
        for i in range(self.stage_count()):
            outs = [c.apply_stage(i, h, visual, actions) for c in self.candidates]
            h, p_mean = self._mix(i, outs)
            self.last_votes.append(p_mean)
        return h

    def predict(self, visual, actions) -> np.ndarray:
        with no_grad():
            return self.forward(visual, actions).data

    def _check_actions(self, actions):
        actions = np.asarray(actions, dtype=np.float64)
        if actions.ndim != 2 or actions.shape[1] != self.config.action_width:
            raise InputError(
                f"action rows must be (N, {self.config.action_width}), got {actions.shape}"
            )
        return actions

    def reuse_fraction(self, index: int) -> float:
        """Mean vote weight on one candidate over all stages, last forward."""
        if not 0 <= index < len(self.candidates):
            raise InputError(f"no candidate {index}")
        if self.last_votes is None:
            raise InputError("no forward pass has run yet")
        return float(np.mean([v[index] for v in self.last_votes]))
