"""Experiment configuration: defaults, learning-rate table, switch catalog.

Configs are plain JSON-compatible dicts. resolve_config deep-merges user
values over the defaults so the echoed config file always shows every knob
that shaped a run.
"""

import copy
import json

from ..errors import ConfigurationError
from ..zoo import ARCHITECTURES, ModuleConfig, widths_for

# Per-task module learning rates, cross-validated per architecture on a
# [1e-4, 1e-3] grid. Columns follow TASK_COLUMNS; scene-mts reuses the loc
# column (the hardest-visuals setting, which is always the conservative rate).
TASK_COLUMNS = (
    "sr2",
    "sr4-double",
    "sr4-quadrant",
    "mts2-stationary",
    "mts2-vertmotion",
    "mts2-horizflip",
    "mts2-vertmotion-horizflip",
    "mts4-2shown",
    "mts4-2shown-vertmotion",
    "mts4-4shown-stationary",
    "mts4-4shown-permuted",
    "loc",
)

_A, _B, _C, _D = 1e-3, 1e-4, 5e-4, 2e-4

LEARNING_RATES = {
    "ems": (_A, _A, _A, _C, _C, _C, _C, _C, _C, _C, _C, _B),
    "partial-symm": (_A, _A, _A, _C, _C, _C, _C, _C, _C, _C, _C, _B),
    "no-symm": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _D, _B),
    "no-symm-partial-mult": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _D, _B),
    "no-mult-relu": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _B),
    "no-mult-tanh": (_A, _A, _A, _A, _B, _A, _A, _A, _A, _B, _B, _B),
    "no-mult-sigmoid": (_A, _A, _A, _A, _B, _A, _A, _A, _A, _B, _B, _B),
    "no-mult-elu": (_A, _A, _B, _A, _A, _A, _A, _A, _A, _A, _A, _B),
    "no-mult-crelu": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _B),
    "late-relu-small": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _B),
    "late-relu-medium": (_A, _A, _A, _B, _B, _B, _B, _B, _B, _B, _B, _B),
    "late-relu-large": (_A, _A, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B),
    "late-tanh-small": (_B, _B, _B, _A, _A, _A, _A, _A, _A, _B, _B, _B),
    "late-tanh-medium": (_B, _B, _B, _A, _A, _A, _A, _A, _A, _B, _B, _B),
    "late-tanh-large": (_B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B),
    "late-sigmoid-small": (_B, _B, _B, _A, _A, _A, _A, _A, _A, _B, _A, _B),
    "late-sigmoid-medium": (_B, _B, _B, _A, _A, _A, _A, _A, _A, _B, _B, _B),
    "late-sigmoid-large": (_B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B),
    "late-elu-small": (_A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _A, _B),
    "late-elu-medium": (_A, _A, _A, _B, _B, _B, _B, _B, _B, _A, _B, _B),
    "late-elu-large": (_B, _B, _A, _B, _B, _B, _B, _B, _B, _B, _B, _B),
    "late-crelu-small": (_A, _A, _A, _A, _A, _B, _A, _A, _A, _A, _A, _B),
    "late-crelu-medium": (_A, _A, _A, _B, _B, _B, _B, _B, _B, _A, _B, _B),
    "late-crelu-large": (_B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B, _B),
}


def learning_rate(arch: str, task: str) -> float:
    """Table lookup; scene-mts falls back to the loc column."""
    if arch not in LEARNING_RATES:
        raise ConfigurationError(f"no learning-rate row for architecture {arch!r}")
    column = "loc" if task == "scene-mts" else task
    if column not in TASK_COLUMNS:
        raise ConfigurationError(f"no learning-rate column for task {task!r}")
    return LEARNING_RATES[arch][TASK_COLUMNS.index(column)]


# Base/switch task pairs. Pair 0 is the no-switch control (identical task
# repeated with a boundary cue in between); 1-15 are the transfer pairs:
# fresh classes, paradigm changes, layout/motion changes, and the three
# reward-geometry transforms (reversal, squeeze, 90-degree rotation).
SWITCH_PAIRS = {
    0: ({"task": "sr2"}, {"task": "sr2"}),
    1: ({"task": "sr2", "class_set": [0, 1]}, {"task": "sr2", "class_set": [2, 3]}),
    2: ({"task": "sr2"}, {"task": "sr4-double"}),
    3: (
        {"task": "mts2-stationary", "class_set": [0, 1]},
        {"task": "mts2-stationary", "class_set": [2, 3]},
    ),
    4: ({"task": "sr2"}, {"task": "mts2-stationary"}),
    5: ({"task": "mts2-stationary"}, {"task": "sr2"}),
    6: ({"task": "mts2-stationary"}, {"task": "mts2-vertmotion-horizflip"}),
    7: ({"task": "mts2-vertmotion-horizflip"}, {"task": "mts4-2shown-vertmotion"}),
    8: ({"task": "mts4-2shown-vertmotion"}, {"task": "mts4-4shown-permuted"}),
    9: ({"task": "sr4-double"}, {"task": "mts4-4shown-stationary"}),
    10: ({"task": "mts4-4shown-stationary"}, {"task": "sr4-quadrant"}),
    11: ({"task": "sr2"}, {"task": "sr4-quadrant"}),
    12: ({"task": "sr4-double"}, {"task": "sr4-quadrant"}),
    13: ({"task": "sr2"}, {"task": "sr2", "transform": "reversal"}),
    14: ({"task": "sr2"}, {"task": "sr2", "transform": "squeeze"}),
    15: ({"task": "sr2"}, {"task": "sr2", "transform": "rotate90"}),
}


DEFAULTS = {
    "out_dir": "runs",
    "bank": {
        "size": 64,
        "n_classes": 4,
        "train_per_class": 40,
        "val_per_class": 16,
        "seed": 0,
    },
    "encoder": {
        "kind": "pretrained",  # pretrained | random | checkpoint
        "conv_channels": [16, 32, 32],
        "scene_width": 128,
        "scene_activation": "raw",
        "epochs": 12,
        "batch_size": 32,
        "lr": 1e-3,
        "seed": 0,
        "path": None,
    },
    "policy": {
        "n_candidates": 512,
        "family": "identity",
        "temperature": 0.01,
        "batch_size": 32,
    },
    "module": {"k_b": 1, "k_f": 2},
    "arch": "ems",
    "task": {"task": "sr2"},
    "tasks": None,  # suite: list of task config dicts
    "architectures": None,  # suite: list of architecture names
    "seed": 0,
    "seeds": [0, 1, 2],
    "steps": 50000,
    "lr": None,  # None -> per-(arch, task) table value
    "probe_every": 500,
    "probe_trials": 64,
    "horizon": None,  # AUC horizon in steps; None -> full budget
    "voting": {
        "mode": "layer",  # layer | unit
        "use_transforms": True,
        "force_one_hot": None,
    },
    "switch": {
        "pairs": sorted(SWITCH_PAIRS),
        "base_steps": 20000,
        "switch_steps": 30000,
        "modes": ["layer", "unit"],
    },
}


def _merge(base, override, path="config"):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if key not in merged:
            raise ConfigurationError(f"unknown key {path}.{key}")
        if isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = _merge(merged[key], value, f"{path}.{key}")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_config(raw: dict = None) -> dict:
    """Fill a partial config dict with defaults and validate the core knobs."""
    cfg = _merge(DEFAULTS, raw or {})
    if cfg["arch"] not in ARCHITECTURES:
        raise ConfigurationError(f"unknown architecture {cfg['arch']!r}")
    for arch in cfg["architectures"] or []:
        if arch not in ARCHITECTURES:
            raise ConfigurationError(f"unknown architecture {arch!r}")
    if cfg["steps"] < 0 or cfg["probe_every"] < 0:
        raise ConfigurationError("step counts must be non-negative")
    if cfg["voting"]["mode"] not in ("layer", "unit"):
        raise ConfigurationError(f"unknown voting mode {cfg['voting']['mode']!r}")
    for mode in cfg["switch"]["modes"]:
        if mode not in ("layer", "unit"):
            raise ConfigurationError(f"unknown voting mode {mode!r}")
    for pair in cfg["switch"]["pairs"]:
        if pair not in SWITCH_PAIRS:
            raise ConfigurationError(f"unknown switch pair {pair!r}")
    return cfg


def load_config(path: str) -> dict:
    with open(path) as f:
        raw = json.load(f)
    return resolve_config(raw)


def dump_config(cfg: dict, path: str):
    """Echo the fully resolved config next to the run outputs."""
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
        f.write("\n")


def module_config_for(cfg: dict, arch: str, task: str, seed: int) -> ModuleConfig:
    """Module shapes for one experiment cell, widths from the size tables."""
    scene_width = cfg["encoder"]["scene_width"]
    k_b = cfg["module"]["k_b"]
    k_f = cfg["module"]["k_f"]
    widths = widths_for(arch, task, scene_width=scene_width, k_b=k_b, k_f=k_f)
    return ModuleConfig(
        arch=arch, widths=widths, k_b=k_b, k_f=k_f, scene_width=scene_width, seed=seed
    )
