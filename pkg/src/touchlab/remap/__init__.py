from .buffers import HistoryBuffer
from .policy import (
    PendingPrediction,
    PolicyConfig,
    RewardMapSample,
    choose_action,
    distify,
    full_grid_maps,
    normalize_map,
    reward_maps,
    subsample_actions,
    var_argmax,
)
from .stream import RunResult, run_probe, run_stream

__all__ = [
    "HistoryBuffer",
    "PendingPrediction",
    "PolicyConfig",
    "RewardMapSample",
    "RunResult",
    "choose_action",
    "distify",
    "full_grid_maps",
    "normalize_map",
    "reward_maps",
    "run_probe",
    "run_stream",
    "subsample_actions",
    "var_argmax",
]
