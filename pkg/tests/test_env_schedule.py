"""Stream semantics: cues, boundaries, reward pairing, replay determinism."""

import numpy as np
import pytest

from touchlab.env import ImageBank, TouchStream, build_stream, replay_stream
from touchlab.env.schedule import read_replay_log, write_replay_log
from touchlab.errors import ConfigurationError, InputError
from touchlab.rng import RngHub


@pytest.fixture(scope="module")
def bank():
    return ImageBank(train_per_class=6, val_per_class=3, seed=0)


def two_task_config(steps_a=10, steps_b=10):
    return {
        "schedule": [
            {"task": "sr2", "class_set": [0, 1], "steps": steps_a},
            {"task": "sr2", "class_set": [2, 3], "steps": steps_b},
        ]
    }


def test_first_emission_reward_zero(bank):
    stream = build_stream(two_task_config(), bank, "train", np.random.default_rng(0))
    first = stream.reset()
    assert first.reward == 0.0
    assert first.image.pixels.shape == (64, 64, 3)


def test_reward_pairs_with_previous_action(bank):
    stream = build_stream(two_task_config(), bank, "train", np.random.default_rng(1))
    stream.reset()
    prog = stream.active_program
    cls = prog._class
    x = 5 if prog.assignment[cls] == "left" else 60
    frame, info = stream.step((x, 32))
    assert frame.reward == 1.0
    assert info.trial_done and info.trial_reward == 1.0


def test_switch_cue_exactly_at_boundary(bank):
    stream = build_stream(two_task_config(5, 5), bank, "train", np.random.default_rng(2))
    stream.reset()
    cues = []
    for _ in range(10):
        _, info = stream.step((0, 0))
        cues.append(info.switch_cue)
        if info.stream_end:
            break
    assert cues == [False] * 4 + [True] + [False] * 5
    assert info.stream_end


def test_no_switch_boundary_still_cues(bank):
    # Same task scheduled twice: the boundary raises a cue all the same.
    config = {
        "schedule": [
            {"task": "sr2", "class_set": [0, 1], "steps": 100},
            {"task": "sr2", "class_set": [0, 1], "steps": 100},
        ]
    }
    stream = build_stream(config, bank, "train", np.random.default_rng(3))
    stream.reset()
    cue_steps = []
    for step in range(1, 201):
        _, info = stream.step((0, 0))
        if info.switch_cue:
            cue_steps.append(step)
        if info.stream_end:
            break
    assert cue_steps == [100]


def test_task_id_reflects_active_program(bank):
    stream = build_stream(two_task_config(3, 3), bank, "train", np.random.default_rng(4))
    stream.reset()
    ids = []
    for _ in range(6):
        _, info = stream.step((0, 0))
        ids.append(info.task_id)
    assert ids[:2] == ["sr2", "sr2"]
    assert ids[3:] == ["sr2", "sr2", "sr2"]


def test_step_after_end_raises(bank):
    stream = build_stream(two_task_config(2, 2), bank, "train", np.random.default_rng(5))
    stream.reset()
    for _ in range(4):
        _, info = stream.step((0, 0))
    assert info.stream_end
    with pytest.raises(InputError):
        stream.step((0, 0))


def test_empty_schedule_rejected(bank):
    with pytest.raises(ConfigurationError):
        TouchStream([], np.random.default_rng(0))


def test_nonpositive_duration_rejected(bank):
    with pytest.raises(ConfigurationError):
        build_stream(
            {"schedule": [{"task": "sr2", "class_set": [0, 1], "steps": 0}]},
            bank,
            "train",
            np.random.default_rng(0),
        )


def test_replay_bit_exact(bank):
    config = {
        "schedule": [
            {"task": "sr2", "class_set": [0, 1], "steps": 30},
            {"task": "mts2-stationary", "class_set": [0, 1], "steps": 30},
        ]
    }
    rng = np.random.default_rng(6)
    actions = [(int(rng.integers(64)), int(rng.integers(64))) for _ in range(60)]
    factory = lambda: RngHub(99).get("env")
    d1, r1 = replay_stream(config, bank, "train", factory, actions)
    d2, r2 = replay_stream(config, bank, "train", factory, actions)
    assert d1 == d2 and r1 == r2
    other = replay_stream(config, bank, "train", lambda: RngHub(100).get("env"), actions)
    assert other[0] != d1


def test_replay_log_round_trip(tmp_path, bank):
    records = [
        {"step": 1, "action": [3, 4], "reward": 0.0},
        {"step": 2, "action": [60, 2], "reward": 1.0},
    ]
    path = tmp_path / "log.jsonl"
    write_replay_log(path, records)
    assert read_replay_log(path) == records


def test_stream_covers_all_thirteen_tasks(bank):
    from touchlab.env import TASK_IDS

    config = {"schedule": [{"task": t, "steps": 4} for t in TASK_IDS]}
    stream = build_stream(config, bank, "train", np.random.default_rng(7))
    stream.reset()
    seen = set()
    while True:
        _, info = stream.step((0, 0))
        seen.add(info.task_id)
        if info.stream_end:
            break
    assert seen == set(TASK_IDS)
