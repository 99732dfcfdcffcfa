"""The TouchStream: a continual stream over a schedule of task programs.

Every step applies the action to the current frame's program, emits the next
frame plus the reward for that action, and raises a switch cue exactly when a
task boundary is crossed (including no-switch boundaries where the next
program equals the current one). The stream is a deterministic function of
(seed, action history).
"""

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, InputError, RewardContractError
from .images import ImageBank, LabeledImage
from .tasks import TaskProgram, build_task_program


@dataclass
class EmittedFrame:
    image: LabeledImage
    reward: float  # for the previous action; 0 on the first emission


@dataclass
class StepInfo:
    step: int
    task_id: str
    trial_done: bool
    trial_reward: float | None
    correct: bool | None
    switch_cue: bool
    stream_end: bool


class TouchStream:
    """schedule: list of (TaskProgram, duration_in_steps)."""

    def __init__(self, schedule, rng):
        if not schedule:
            raise ConfigurationError("empty schedule")
        for program, duration in schedule:
            if duration <= 0:
                raise ConfigurationError("schedule durations must be positive")
            if not isinstance(program, TaskProgram):
                raise ConfigurationError(f"not a TaskProgram: {program!r}")
        self.schedule = list(schedule)
        self.rng = rng
        self._task_index = 0
        self._steps_in_task = 0
        self._step = 0
        self._frame = None
        self._ended = False

    @property
    def active_program(self) -> TaskProgram:
        return self.schedule[self._task_index][0]

    def reset(self) -> EmittedFrame:
        self._task_index = 0
        self._steps_in_task = 0
        self._step = 0
        self._ended = False
        self._frame = self.active_program.reset(self.rng)
        return EmittedFrame(self._frame, 0.0)

    def step(self, action):
        if self._frame is None:
            raise ConfigurationError("call reset() before step()")
        if self._ended:
            raise InputError("stream has ended")
        outcome = self.active_program.step(action, self.rng)
        if not 0.0 <= outcome.reward <= 1.0:
            raise RewardContractError(f"reward {outcome.reward} outside [0,1]")
        self._step += 1
        self._steps_in_task += 1
        cue = False
        stream_end = False
        next_frame = outcome.next_frame
        if self._steps_in_task >= self.schedule[self._task_index][1]:
            if self._task_index + 1 < len(self.schedule):
                self._task_index += 1
                self._steps_in_task = 0
                cue = True
                next_frame = self.active_program.reset(self.rng)
            else:
                stream_end = True
                self._ended = True
        self._frame = next_frame
        info = StepInfo(
            step=self._step,
            task_id=self.active_program.task_id,
            trial_done=outcome.trial_done,
            trial_reward=outcome.trial_reward,
            correct=outcome.correct,
            switch_cue=cue,
            stream_end=stream_end,
        )
        return EmittedFrame(next_frame, float(outcome.reward)), info


def build_stream(config: dict, bank: ImageBank, split: str, rng) -> TouchStream:
    """Build a stream from a schedule config: {"schedule": [{task..., steps}, ...]}."""
    schedule = []
    for entry in config["schedule"]:
        program = build_task_program(entry, bank, split)
        schedule.append((program, int(entry["steps"])))
    return TouchStream(schedule, rng)


def replay_stream(config: dict, bank: ImageBank, split: str, seed_rng_factory, actions):
    """Re-run a stream over a recorded action list; returns (digests, rewards)."""
    stream = build_stream(config, bank, split, seed_rng_factory())
    first = stream.reset()
    digests = [first.image.digest]
    rewards = [first.reward]
    for action in actions:
        frame, info = stream.step(action)
        digests.append(frame.image.digest)
        rewards.append(frame.reward)
        if info.stream_end:
            break
    return digests, rewards


def write_replay_log(path, records):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_replay_log(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
