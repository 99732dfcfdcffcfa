"""The full learning loop over a task stream.

Each step: choose an action from the current reward maps, execute it, pair
the emitted reward with the predictions it settles (the offset-j logit of the
prediction issued j steps ago), and run an Adam update over the chosen
actions' logits every batch-size completions. Validation probes periodically
freeze the loop and measure mean completed-trial reward on held-out images.
"""

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..diffcore import Adam, concat, sigmoid_cross_entropy, t_mean
from ..env import build_stream, build_task_program
from ..errors import TrainingError
from .buffers import HistoryBuffer
from .policy import PolicyConfig, choose_action


@dataclass
class RunResult:
    steps: int
    rewards: np.ndarray
    losses: list  # (step, loss) per update
    curve: list  # (step, validation reward) per probe
    loss_terms_per_update: int
    records: list = field(repr=False, default_factory=list)
    log_path: str = None
    curve_path: str = None


def _make_buffers(module, bank):
    cfg = module.config
    spatial_shape = None
    if getattr(cfg, "conv", False):
        spatial_shape = (cfg.spatial_hw, cfg.spatial_hw, cfg.spatial_channels)
    return HistoryBuffer(cfg.k_b, cfg.scene_width, bank.size, spatial_shape)


def _param_groups(module, lr):
    if hasattr(module, "param_groups"):
        return module.param_groups(lr)
    return [(module.trainable_params(), lr)]


def _update(module, optimizer, batch, k_f):
    terms = []
    for rec in batch:
        logits = module.forward(rec.visual, rec.action_row)
        terms.append(sigmoid_cross_entropy(logits, np.asarray([rec.targets])))
    loss = t_mean(concat(terms, axis=0))
    if not np.isfinite(loss.data):
        err = TrainingError(f"non-finite loss over steps {[r.step for r in batch]}")
        err.snapshot = {
            "steps": [r.step for r in batch],
            "targets": [r.targets for r in batch],
            "logits": [r.logits.tolist() for r in batch],
        }
        raise err
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return float(loss.data), len(batch) * k_f


def run_probe(task_cfg, bank, encoder, module, policy, hub, step, n_trials=64, split="val"):
    """Mean completed-trial decision reward under the current parameters."""
    env_rng = hub.probe("val-env", step)
    pol_rng = hub.probe("val-policy", step)
    program = build_task_program(task_cfg, bank, split)
    buffers = _make_buffers(module, bank)
    frame = program.reset(env_rng)
    buffers.push_frame(encoder.encode_cached(frame.pixels, frame.digest))
    completed = []
    for _ in range(4 * n_trials + 8):
        pixel, _, _ = choose_action(module, buffers, policy, pol_rng)
        out = program.step(pixel, env_rng)
        if out.trial_done:
            completed.append(out.trial_reward)
        buffers.push_action(pixel)
        buffers.push_frame(encoder.encode_cached(out.next_frame.pixels, out.next_frame.digest))
        if len(completed) >= n_trials:
            break
    return float(np.mean(completed)) if completed else 0.0


def run_stream(
    stream_config,
    bank,
    encoder,
    module,
    policy: PolicyConfig,
    hub,
    steps: int,
    lr=1e-3,
    learn=True,
    probe_every=500,
    probe_trials=64,
    out_dir=None,
    run_name="run",
) -> RunResult:
    """Execute the learning loop for a fixed number of stream steps."""
    if steps < 0:
        raise TrainingError("steps must be non-negative")
    stream = build_stream(stream_config, bank, "train", hub.get("env"))
    policy_rng = hub.get("policy")
    buffers = _make_buffers(module, bank)
    first = stream.reset()
    buffers.push_frame(encoder.encode_cached(first.image.pixels, first.image.digest))
    optimizer = Adam(_param_groups(module, lr)) if learn else None
    k_f = module.config.k_f
    pending = {}
    ready = []
    task_idx = 0
    rewards = np.zeros(steps)
    losses, curve, records = [], [], []
    terms_per_update = policy.batch_size * k_f

    for step in range(steps):
        pixel, sample, pend = choose_action(module, buffers, policy, policy_rng, step)
        votes = getattr(module, "last_votes", None)
        frame, info = stream.step(pixel)
        r = frame.reward
        rewards[step] = r
        pending[step] = pend
        for offset in range(k_f):
            issued = step - offset
            if issued in pending and pending[issued].targets[offset] is None:
                pending[issued].retire(offset, r)
        settled = step - (k_f - 1)
        if settled in pending and pending[settled].complete:
            ready.append(pending.pop(settled))

        loss_value = None
        if learn and len(ready) >= policy.batch_size:
            batch = ready[: policy.batch_size]
            del ready[: policy.batch_size]
            loss_value, n_terms = _update(module, optimizer, batch, k_f)
            assert n_terms == terms_per_update
            losses.append((step + 1, loss_value))

        record = {
            "step": step + 1,
            "task": info.task_id,
            "action": [pixel[0], pixel[1]],
            "reward": r,
            "loss": loss_value,
            "map": sample.chosen_map,
        }
        if votes is not None:
            record["votes"] = [[round(float(w), 6) for w in stage] for stage in votes]
        records.append(record)
        buffers.push_action(pixel)
        buffers.push_frame(encoder.encode_cached(frame.image.pixels, frame.image.digest))

        if info.switch_cue:
            task_idx += 1
            if hasattr(module, "on_switch_cue"):
                module.on_switch_cue()
                if learn:
                    optimizer = Adam(_param_groups(module, lr))

        if probe_every and (step + 1) % probe_every == 0:
            task_cfg = stream_config["schedule"][task_idx]
            val = run_probe(
                task_cfg, bank, encoder, module, policy, hub, step + 1, probe_trials
            )
            curve.append((step + 1, val))
        if info.stream_end:
            break

    log_path = curve_path = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_path = os.path.join(out_dir, f"{run_name}.jsonl")
        with open(log_path, "w") as fh:
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        curve_path = os.path.join(out_dir, f"{run_name}_curve.csv")
        probe_at = dict(curve)
        with open(curve_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "window_reward", "val_reward"])
            for s, val in sorted(probe_at.items()):
                lo = max(0, s - 500)
                writer.writerow([s, float(rewards[lo:s].mean()), val])

    return RunResult(
        steps=steps,
        rewards=rewards,
        losses=losses,
        curve=curve,
        loss_terms_per_update=terms_per_update,
        records=records,
        log_path=log_path,
        curve_path=curve_path,
    )
