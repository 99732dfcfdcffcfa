from .config import (
    DEFAULTS,
    LEARNING_RATES,
    SWITCH_PAIRS,
    TASK_COLUMNS,
    dump_config,
    learning_rate,
    load_config,
    module_config_for,
    resolve_config,
)
from .experiment import (
    make_bank,
    make_encoder,
    pretrain_backbone,
    recovery_stats,
    render_maps,
    run_suite,
    run_switch,
    run_switch_pair,
    run_task,
    stable_root,
    task_slug,
    vote_stats,
    write_report,
)
from .maps import colorize, rasterize_field, render_grid_maps, render_reward_map
from .metrics import auc, rgain, ta_n_auc, tgain, validate_curve

__all__ = [
    "DEFAULTS",
    "LEARNING_RATES",
    "SWITCH_PAIRS",
    "TASK_COLUMNS",
    "auc",
    "colorize",
    "dump_config",
    "learning_rate",
    "load_config",
    "make_bank",
    "make_encoder",
    "module_config_for",
    "pretrain_backbone",
    "rasterize_field",
    "recovery_stats",
    "render_grid_maps",
    "render_maps",
    "render_reward_map",
    "resolve_config",
    "rgain",
    "run_suite",
    "run_switch",
    "run_switch_pair",
    "run_task",
    "stable_root",
    "ta_n_auc",
    "task_slug",
    "tgain",
    "validate_curve",
    "vote_stats",
    "write_report",
]
