"""Learning-curve metrics: AUC, task-normalized averages, and switch gains."""

import numpy as np

from ..errors import InputError


def validate_curve(curve):
    """Check a (step, reward) sequence and split it into arrays.

    Steps must be strictly increasing and rewards must lie in [0, 1].
    """
    points = list(curve)
    if len(points) < 2:
        raise InputError("a curve needs at least two points")
    steps = np.asarray([p[0] for p in points], dtype=np.float64)
    values = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.any(np.diff(steps) <= 0):
        raise InputError("curve steps must be strictly increasing")
    if np.any(values < 0) or np.any(values > 1):
        raise InputError("curve rewards must lie in [0, 1]")
    return steps, values


def auc(curve) -> float:
    """Trapezoidal area under a learning curve."""
    steps, values = validate_curve(curve)
    return float(np.trapezoid(values, steps))


def ta_n_auc(auc_table: dict) -> dict:
    """Task-averaged normalized AUC per module.

    auc_table maps module -> {task -> auc}. Within each task every module's
    AUC is divided by the task's maximum, then the normalized scores are
    averaged over tasks. Every module must cover every task.
    """
    if not auc_table:
        raise InputError("empty AUC table")
    modules = sorted(auc_table)
    tasks = sorted({t for by_task in auc_table.values() for t in by_task})
    for module in modules:
        missing = [t for t in tasks if t not in auc_table[module]]
        if missing:
            raise InputError(f"module {module!r} has no AUC for {missing}")
    scores = {m: 0.0 for m in modules}
    for task in tasks:
        top = max(auc_table[m][task] for m in modules)
        if top <= 0:
            raise InputError(f"no positive AUC for task {task!r}")
        for m in modules:
            scores[m] += auc_table[m][task] / top
    return {m: scores[m] / len(tasks) for m in modules}


def _matched(switch_curve, scratch_curve):
    s_steps, s_values = validate_curve(switch_curve)
    b_steps, b_values = validate_curve(scratch_curve)
    if len(s_steps) != len(b_steps) or np.any(s_steps != b_steps):
        raise InputError("switch and scratch curves cover different steps")
    return s_steps, s_values, b_values


def rgain(switch_curve, scratch_curve) -> float:
    """Relative AUC gain of the transferred curve over the scratch curve."""
    _matched(switch_curve, scratch_curve)
    base = auc(scratch_curve)
    if base <= 0:
        raise InputError("scratch AUC must be positive")
    return (auc(switch_curve) - base) / base


def tgain(switch_curve, scratch_curve) -> float:
    """Peak reward advantage divided by the step where it first occurs."""
    steps, s_values, b_values = _matched(switch_curve, scratch_curve)
    delta = s_values - b_values
    i = int(np.argmax(delta))
    if delta[i] == 0.0:
        return 0.0
    if steps[i] <= 0:
        raise InputError("gain curves must start after step 0")
    return float(delta[i] / steps[i])
