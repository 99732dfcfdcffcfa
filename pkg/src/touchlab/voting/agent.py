"""A continual learner that allocates a module per task boundary.

The agent starts as one trainable module. On every switch cue it freezes the
newest module, attaches trainable transforms to it, appends a fresh module,
and rebuilds the candidate list [old modules..., transformed newest, fresh]
with a reinitialized vote state. The stream loop drives it through the same
forward/predict/param-group interface a bare module exposes.
"""

import dataclasses

import numpy as np

from .. import checkpoint as ckpt
from ..errors import CheckpointError, InputError
from ..zoo import ModuleConfig, ReMaPModule
from .controller import ControllerConfig, VoteState, VotingComposite, init_votes
from .transforms import TransformCandidate

CHECKPOINT_KIND = "voting-agent"


def allocation_seed(controller_seed: int, index: int) -> int:
    """Deterministic seed for the index-th allocated module."""
    return int(np.random.SeedSequence([controller_seed, index]).generate_state(1)[0])


class VotingAgent:
    def __init__(self, module: ReMaPModule, controller: ControllerConfig, task_label="task-0"):
        self.controller = controller
        self.modules = [module]
        self.labels = [task_label]
        self.composite = None
        self.transform = None

    @property
    def config(self) -> ModuleConfig:
        return self.modules[-1].config

    @property
    def active(self):
        return self.composite if self.composite is not None else self.modules[-1]

    @property
    def last_votes(self):
        return None if self.composite is None else self.composite.last_votes

    def forward(self, visual, actions):
        return self.active.forward(visual, actions)

    def predict(self, visual, actions):
        return self.active.predict(visual, actions)

    def reuse_fraction(self, index: int) -> float:
        if self.composite is None:
            raise InputError("no composite yet; reuse is defined after a switch cue")
        return self.composite.reuse_fraction(index)

    def on_switch_cue(self, task_label=None):
        """Freeze the incumbent, allocate a fresh module, rebuild the vote."""
        index = len(self.modules)
        newest = self.modules[-1]
        newest.freeze()
        seed = allocation_seed(self.controller.seed, index)
        fresh = ReMaPModule(dataclasses.replace(newest.config, seed=seed))
        rng = np.random.default_rng(np.random.SeedSequence([self.controller.seed, index, 1]))
        candidates = list(self.modules)
        if self.controller.use_transforms:
            self.transform = TransformCandidate(newest, self.controller, rng=rng)
            candidates.append(self.transform)
        else:
            self.transform = None
        candidates.append(fresh)
        votes = init_votes(
            self.controller, newest.stage_widths(), len(candidates), rng, n_old=index
        )
        self.modules.append(fresh)
        self.labels.append(task_label if task_label else f"task-{index}")
        self.composite = VotingComposite(candidates, votes, self.controller)

    def param_groups(self, lr):
        """Adam groups: fresh module, vote, then each transform at its rate."""
        ctl = self.controller
        groups = [(self.modules[-1].trainable_params(), lr)]
        if self.composite is not None:
            vote_lr = lr if ctl.controller_lr is None else ctl.controller_lr
            groups.append((self.composite.votes.params(), vote_lr))
        if self.transform is not None:
            groups.append((self.transform.action.params(), ctl.action_lr))
            groups.append((self.transform.adapter.params(), ctl.adapter_lr))
        return groups

    def trainable_params(self):
        return [p for params, _ in self.param_groups(0.0) for p in params]

    def save(self, path) -> str:
        arrays = {}
        for m, module in enumerate(self.modules):
            for name, p in module.params.items():
                arrays[f"module{m}.{name}"] = p.data
        if self.composite is not None:
            for p in self.composite.votes.params():
                arrays[f"vote.{p.name}"] = p.data
        if self.transform is not None:
            for p in self.transform.trainable_params():
                arrays[f"transform.{p.name}"] = p.data
        spec = {
            "controller": dataclasses.asdict(self.controller),
            "module_configs": [m.config.to_dict() for m in self.modules],
            "frozen": [m.frozen for m in self.modules],
            "labels": list(self.labels),
        }
        return ckpt.save_checkpoint(path, CHECKPOINT_KIND, spec, arrays)

    @staticmethod
    def load(path) -> "VotingAgent":
        _, spec, arrays, _ = ckpt.load_checkpoint(path, expect_kind=CHECKPOINT_KIND)
        controller = ControllerConfig(**spec["controller"])
        configs = [ModuleConfig.from_dict(d) for d in spec["module_configs"]]
        agent = VotingAgent(ReMaPModule(configs[0]), controller, spec["labels"][0])
        for label in spec["labels"][1:]:
            agent.on_switch_cue(label)
        if [m.config for m in agent.modules] != configs:
            raise CheckpointError("saved module configs do not replay from the controller seed")
        for m, module in enumerate(agent.modules):
            for name, p in module.params.items():
                p.data = arrays[f"module{m}.{name}"].copy()
        if agent.composite is not None:
            for p in agent.composite.votes.params():
                p.data = arrays[f"vote.{p.name}"].copy()
        if agent.transform is not None:
            for p in agent.transform.trainable_params():
                p.data = arrays[f"transform.{p.name}"].copy()
        for frozen, module in zip(spec["frozen"], agent.modules):
            if frozen and not module.frozen:
                module.freeze()
        return agent
