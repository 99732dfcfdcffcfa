"""Experiment cells, suites, and switch runs with resumable file outputs.

Every cell (architecture x task x seed) runs in its own subdirectory with an
isolated RNG root derived by hashing the cell coordinates. Reruns with the
same config reproduce every file byte for byte; suites skip cells whose
summary already exists.
"""

import dataclasses
import hashlib
import json
import os

import numpy as np

from ..backbone import ConvEncoder, EncoderSpec
from ..env import ImageBank
from ..errors import ConfigurationError, InputError
from ..remap import PolicyConfig, run_stream
from ..rng import RngHub
from ..voting import ControllerConfig, VotingAgent, allocation_seed
from ..zoo import ReMaPModule, build_module, count_parameters
from .config import SWITCH_PAIRS, dump_config, learning_rate, module_config_for, resolve_config
from .maps import render_grid_maps
from .metrics import auc, rgain, ta_n_auc, tgain


def stable_root(*parts) -> int:
    """Deterministic 63-bit RNG root from the cell coordinates."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big") >> 1


def task_slug(task_cfg: dict) -> str:
    """Filesystem-safe name for a task config."""
    slug = task_cfg["task"]
    if task_cfg.get("class_set"):
        slug += "-c" + "".join(str(c) for c in task_cfg["class_set"])
    if task_cfg.get("transform", "none") != "none":
        slug += "-" + task_cfg["transform"]
    return slug


def write_json(payload: dict, path: str):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def make_bank(cfg: dict) -> ImageBank:
    b = cfg["bank"]
    return ImageBank(
        size=b["size"],
        n_classes=b["n_classes"],
        train_per_class=b["train_per_class"],
        val_per_class=b["val_per_class"],
        seed=b["seed"],
    )


def encoder_spec(cfg: dict, bank: ImageBank) -> EncoderSpec:
    e = cfg["encoder"]
    return EncoderSpec(
        input_hw=bank.size,
        conv_channels=tuple(e["conv_channels"]),
        scene_width=e["scene_width"],
        scene_activation=e["scene_activation"],
        n_classes=bank.n_classes,
        seed=e["seed"],
    )


def pretrain_backbone(cfg: dict, path: str = None) -> dict:
    """Pretrain the frozen visual encoder and write its checkpoint."""
    cfg = resolve_config(cfg)
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    path = path or os.path.join(out_dir, "backbone.npz")
    bank = make_bank(cfg)
    spec = encoder_spec(cfg, bank)
    enc = ConvEncoder(spec)
    e = cfg["encoder"]
    history = []
    if e["epochs"] > 0:
        images, labels = bank.classification_arrays("train")
        history = enc.pretrain(
            images, labels, epochs=e["epochs"], batch_size=e["batch_size"], lr=e["lr"]
        )
    val_images, val_labels = bank.classification_arrays("val")
    accuracy = enc.evaluate(val_images, val_labels)
    enc.freeze()
    digest = enc.save(path)
    summary = {
        "path": path,
        "weight_hash": digest,
        "val_accuracy": accuracy,
        "epochs": e["epochs"],
        "loss_history": history,
        "provenance": enc.spec.provenance,
    }
    write_json(summary, os.path.join(out_dir, "backbone.json"))
    return summary


def make_encoder(cfg: dict, bank: ImageBank, out_dir: str = None) -> ConvEncoder:
    """Load, reuse, or pretrain the frozen encoder for a run."""
    e = cfg["encoder"]
    if e["kind"] == "checkpoint":
        if not e["path"]:
            raise ConfigurationError("encoder kind 'checkpoint' needs a path")
        return ConvEncoder.load(e["path"])
    if e["kind"] == "random":
        return ConvEncoder(encoder_spec(cfg, bank)).freeze()
    if e["kind"] != "pretrained":
        raise ConfigurationError(f"unknown encoder kind {e['kind']!r}")
    cached = os.path.join(out_dir, "backbone.npz") if out_dir else None
    if cached and os.path.exists(cached):
        return ConvEncoder.load(cached)
    summary = pretrain_backbone(cfg, path=cached)
    return ConvEncoder.load(summary["path"]) if cached else _pretrain_in_memory(cfg, bank)


def _pretrain_in_memory(cfg: dict, bank: ImageBank) -> ConvEncoder:
    e = cfg["encoder"]
    enc = ConvEncoder(encoder_spec(cfg, bank))
    if e["epochs"] > 0:
        images, labels = bank.classification_arrays("train")
        enc.pretrain(images, labels, epochs=e["epochs"], batch_size=e["batch_size"], lr=e["lr"])
    return enc.freeze()


def run_task(cfg: dict, arch=None, task_cfg=None, seed=None, bank=None, encoder=None,
             cell_dir=None) -> dict:
    """One experiment cell: train one module on one task with one seed."""
    cfg = resolve_config(cfg)
    arch = arch or cfg["arch"]
    task_cfg = dict(task_cfg or cfg["task"])
    seed = cfg["seed"] if seed is None else seed
    slug = task_slug(task_cfg)
    cell_dir = cell_dir or os.path.join(cfg["out_dir"], f"{arch}__{slug}__s{seed}")
    os.makedirs(cell_dir, exist_ok=True)
    bank = bank or make_bank(cfg)
    encoder = encoder if encoder is not None else make_encoder(cfg, bank, cfg["out_dir"])
    lr = cfg["lr"] if cfg["lr"] is not None else learning_rate(arch, task_cfg["task"])
    module_cfg = module_config_for(cfg, arch, task_cfg["task"], seed)
    module = build_module(module_cfg)
    policy = PolicyConfig(**cfg["policy"])
    hub = RngHub(stable_root("cell", arch, slug, seed))
    steps = cfg["steps"]
    dump_config({**cfg, "arch": arch, "task": task_cfg, "seed": seed},
                os.path.join(cell_dir, "config.json"))
    result = run_stream(
        {"schedule": [{**task_cfg, "steps": steps}]},
        bank,
        encoder,
        module,
        policy,
        hub,
        steps=steps,
        lr=lr,
        probe_every=cfg["probe_every"],
        probe_trials=cfg["probe_trials"],
        out_dir=cell_dir,
        run_name="steps",
    )
    horizon = cfg["horizon"] or steps
    curve = [(s, v) for s, v in result.curve if s <= horizon]
    module.save(os.path.join(cell_dir, "module.npz"))
    summary = {
        "arch": arch,
        "task": slug,
        "task_config": task_cfg,
        "seed": seed,
        "lr": lr,
        "steps": steps,
        "horizon": horizon,
        "n_params": count_parameters(module_cfg),
        "auc": auc(curve) if len(curve) >= 2 else 0.0,
        "final_val": curve[-1][1] if curve else None,
        "best_val": max((v for _, v in curve), default=None),
        "mean_reward_last_1000": float(np.mean(result.rewards[-1000:])) if steps else None,
        "files": {
            "log": os.path.relpath(result.log_path, cell_dir) if result.log_path else None,
            "curve": os.path.relpath(result.curve_path, cell_dir) if result.curve_path else None,
            "module": "module.npz",
        },
    }
    write_json(summary, os.path.join(cell_dir, "summary.json"))
    return summary


def run_suite(cfg: dict) -> dict:
    """All (architecture x task x seed) cells plus the TA-N-AUC table."""
    cfg = resolve_config(cfg)
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    dump_config(cfg, os.path.join(out_dir, "config.json"))
    bank = make_bank(cfg)
    encoder = make_encoder(cfg, bank, out_dir)
    archs = cfg["architectures"] or [cfg["arch"]]
    tasks = cfg["tasks"] or [cfg["task"]]
    cells = []
    for arch in archs:
        for task_cfg in tasks:
            slug = task_slug(task_cfg)
            for seed in cfg["seeds"]:
                cell_dir = os.path.join(out_dir, "cells", f"{arch}__{slug}__s{seed}")
                done = os.path.join(cell_dir, "summary.json")
                if os.path.exists(done):
                    cells.append(read_json(done))
                    continue
                try:
                    cells.append(
                        run_task(cfg, arch=arch, task_cfg=task_cfg, seed=seed,
                                 bank=bank, encoder=encoder, cell_dir=cell_dir)
                    )
                except (ValueError, RuntimeError) as exc:
                    failure = {"arch": arch, "task": slug, "seed": seed,
                               "error": f"{type(exc).__name__}: {exc}"}
                    os.makedirs(cell_dir, exist_ok=True)
                    write_json(failure, os.path.join(cell_dir, "failure.json"))
                    cells.append(failure)
    expected = [(a, task_slug(t)) for a in archs for t in tasks]
    scores = {}
    for seed in cfg["seeds"]:
        table = {}
        for cell in cells:
            if "error" in cell or cell["seed"] != seed:
                continue
            table.setdefault(cell["arch"], {})[cell["task"]] = cell["auc"]
        complete = all(slug in table.get(a, {}) for a, slug in expected)
        try:
            scores[str(seed)] = ta_n_auc(table) if complete else None
        except InputError:
            scores[str(seed)] = None
    summary = {
        "architectures": list(archs),
        "tasks": [task_slug(t) for t in tasks],
        "seeds": list(cfg["seeds"]),
        "cells": cells,
        "ta_n_auc": scores,
        "errors": sum(1 for c in cells if "error" in c),
    }
    write_json(summary, os.path.join(out_dir, "suite.json"))
    _write_auc_csv(cells, os.path.join(out_dir, "aucs.csv"))
    _write_score_csv(scores, os.path.join(out_dir, "ta_n_auc.csv"))
    return summary


def _write_auc_csv(cells, path):
    lines = ["arch,task,seed,auc,final_val"]
    for c in cells:
        if "error" in c:
            continue
        lines.append(f"{c['arch']},{c['task']},{c['seed']},{c['auc']},{c['final_val']}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _write_score_csv(scores, path):
    lines = ["seed,arch,ta_n_auc"]
    for seed in sorted(scores):
        if scores[seed] is None:
            continue
        for arch in sorted(scores[seed]):
            lines.append(f"{seed},{arch},{scores[seed][arch]}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def vote_stats(records, window=1000) -> dict:
    """Mean per-candidate vote weight over the last logged steps."""
    votes = [r["votes"] for r in records if "votes" in r]
    if not votes:
        return {"per_candidate": None, "old_module": None, "all_but_fresh": None}
    n_candidates = len(votes[-1][0])
    tail = [v for v in votes if len(v[0]) == n_candidates][-window:]
    arr = np.asarray(tail, dtype=np.float64)  # (steps, stages, candidates)
    per = arr.mean(axis=(0, 1))
    return {
        "per_candidate": [float(v) for v in per],
        "old_module": float(per[0]),
        "all_but_fresh": float(per[:-1].sum()),
    }


def recovery_stats(records, cue_step, window=500, horizon=5000) -> dict:
    """Reward level before a cue and per-window means after it."""
    rewards = [r["reward"] for r in records]
    pre = rewards[max(0, cue_step - 2000):cue_step]
    post_means = []
    for lo in range(cue_step, min(cue_step + horizon, len(rewards)), window):
        chunk = rewards[lo:lo + window]
        if chunk:
            post_means.append(float(np.mean(chunk)))
    pre_mean = float(np.mean(pre)) if pre else None
    recovery_step = None
    if pre_mean:
        for i, m in enumerate(post_means):
            if m >= 0.9 * pre_mean:
                recovery_step = (i + 1) * window
                break
    return {"pre_mean": pre_mean, "window": window, "post_means": post_means,
            "recovery_step": recovery_step}


def run_switch_pair(cfg: dict, pair_id: int, seed: int, bank, encoder, pair_dir) -> dict:
    """One switch record: voting runs per mode against a shared scratch run."""
    base_cfg, switch_cfg = (dict(t) for t in SWITCH_PAIRS[pair_id])
    arch = cfg["arch"]
    sw = cfg["switch"]
    base_steps, switch_steps = sw["base_steps"], sw["switch_steps"]
    lr = cfg["lr"] if cfg["lr"] is not None else learning_rate(arch, switch_cfg["task"])
    policy = PolicyConfig(**cfg["policy"])
    probe_every, probe_trials = cfg["probe_every"], cfg["probe_trials"]
    os.makedirs(pair_dir, exist_ok=True)

    base_module_cfg = module_config_for(cfg, arch, base_cfg["task"], seed)
    scratch_cfg = dataclasses.replace(base_module_cfg, seed=allocation_seed(seed, 1))
    scratch = run_stream(
        {"schedule": [{**switch_cfg, "steps": switch_steps}]},
        bank, encoder, build_module(scratch_cfg), policy,
        RngHub(stable_root("scratch", pair_id, seed)),
        steps=switch_steps, lr=lr, probe_every=probe_every, probe_trials=probe_trials,
        out_dir=pair_dir, run_name=f"scratch-s{seed}",
    )
    record = {
        "pair": pair_id,
        "base_task": task_slug(base_cfg),
        "switch_task": task_slug(switch_cfg),
        "seed": seed,
        "lr": lr,
        "base_steps": base_steps,
        "switch_steps": switch_steps,
        "scratch_curve": [[s, v] for s, v in scratch.curve],
        "modes": {},
    }
    for mode in sw["modes"]:
        controller = ControllerConfig(
            mode=mode,
            use_transforms=cfg["voting"]["use_transforms"],
            force_one_hot=cfg["voting"]["force_one_hot"],
            seed=seed,
        )
        agent = VotingAgent(build_module(base_module_cfg), controller,
                            task_label=task_slug(base_cfg))
        result = run_stream(
            {"schedule": [{**base_cfg, "steps": base_steps},
                          {**switch_cfg, "steps": switch_steps}]},
            bank, encoder, agent, policy,
            RngHub(stable_root("switch", pair_id, seed, mode)),
            steps=base_steps + switch_steps, lr=lr,
            probe_every=probe_every, probe_trials=probe_trials,
            out_dir=pair_dir, run_name=f"vote-{mode}-s{seed}",
        )
        post = [(s - base_steps, v) for s, v in result.curve if s > base_steps]
        entry = {
            "curve": [[s, v] for s, v in post],
            "reuse": vote_stats(result.records),
            "recovery": recovery_stats(result.records, base_steps),
            "n_modules": len(agent.modules),
        }
        if len(post) >= 2 and len(scratch.curve) >= 2:
            entry["rgain"] = rgain(post, scratch.curve)
            entry["tgain"] = tgain(post, scratch.curve)
        record["modes"][mode] = entry
    write_json(record, os.path.join(pair_dir, f"record-s{seed}.json"))
    return record


def run_switch(cfg: dict) -> dict:
    """All configured switch pairs and seeds; resumable per record."""
    cfg = resolve_config(cfg)
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    dump_config(cfg, os.path.join(out_dir, "config.json"))
    bank = make_bank(cfg)
    encoder = make_encoder(cfg, bank, out_dir)
    records = []
    for pair_id in cfg["switch"]["pairs"]:
        pair_dir = os.path.join(out_dir, "switches", f"pair{pair_id:02d}")
        for seed in cfg["seeds"]:
            done = os.path.join(pair_dir, f"record-s{seed}.json")
            if os.path.exists(done):
                records.append(read_json(done))
                continue
            try:
                records.append(run_switch_pair(cfg, pair_id, seed, bank, encoder, pair_dir))
            except (ValueError, RuntimeError) as exc:
                failure = {"pair": pair_id, "seed": seed,
                           "error": f"{type(exc).__name__}: {exc}"}
                os.makedirs(pair_dir, exist_ok=True)
                write_json(failure, os.path.join(pair_dir, f"failure-s{seed}.json"))
                records.append(failure)
    summary = {
        "pairs": list(cfg["switch"]["pairs"]),
        "seeds": list(cfg["seeds"]),
        "records": records,
        "errors": sum(1 for r in records if "error" in r),
    }
    write_json(summary, os.path.join(out_dir, "switch.json"))
    _write_switch_csv(records, os.path.join(out_dir, "gains.csv"))
    return summary


def _write_switch_csv(records, path):
    lines = ["pair,base_task,switch_task,seed,mode,rgain,tgain,reuse_old"]
    for r in records:
        if "error" in r:
            continue
        for mode, entry in sorted(r["modes"].items()):
            lines.append(
                f"{r['pair']},{r['base_task']},{r['switch_task']},{r['seed']},{mode},"
                f"{entry.get('rgain', '')},{entry.get('tgain', '')},"
                f"{entry['reuse']['old_module'] if entry['reuse']['old_module'] is not None else ''}"
            )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def render_maps(cfg: dict, module_path: str, out_path: str, n_frames: int = 4) -> str:
    """Render dense reward maps for the first frames of fresh trials."""
    cfg = resolve_config(cfg)
    if n_frames < 1:
        raise InputError("need at least one frame")
    bank = make_bank(cfg)
    encoder = make_encoder(cfg, bank, cfg["out_dir"])
    module = ReMaPModule.load(module_path)
    hub = RngHub(stable_root("render", task_slug(cfg["task"])))
    from ..env import build_task_program
    from ..remap.policy import full_grid_maps
    from ..remap.stream import _make_buffers

    program = build_task_program(cfg["task"], bank, "val")
    env_rng = hub.get("env")
    buffers = _make_buffers(module, bank)
    frame = program.reset(env_rng)
    sheets = []
    for _ in range(n_frames):
        buffers.push_frame(encoder.encode_cached(frame.pixels, frame.digest))
        sheets.append(full_grid_maps(module, buffers, bank.size))
        pixel = (bank.size // 2, bank.size // 2)
        out = program.step(pixel, env_rng)
        buffers.push_action(pixel)
        frame = out.next_frame
    if n_frames == 1:
        return render_grid_maps(sheets[0], bank.size, out_path)
    return _render_sheet_stack(sheets, bank.size, out_path)


def _render_sheet_stack(sheets, size, out_path):
    from PIL import Image

    from .maps import GUTTER, colorize

    rows = []
    for maps in sheets:
        panels = []
        for j in range(maps.shape[2]):
            if j:
                panels.append(np.full((size, GUTTER, 3), 255, dtype=np.uint8))
            panels.append(colorize(maps[:, :, j]))
        rows.append(np.concatenate(panels, axis=1))
        rows.append(np.full((GUTTER, rows[-1].shape[1], 3), 255, dtype=np.uint8))
    sheet = np.concatenate(rows[:-1], axis=0)
    image = Image.fromarray(sheet, mode="RGB").resize(
        (sheet.shape[1] * 4, sheet.shape[0] * 4), Image.NEAREST
    )
    image.save(out_path, format="PNG")
    return out_path


def write_report(out_dir: str) -> str:
    """Aggregate suite and switch summaries in out_dir into a markdown report."""
    lines = ["# Experiment report", ""]
    suite_path = os.path.join(out_dir, "suite.json")
    if os.path.exists(suite_path):
        suite = read_json(suite_path)
        lines += ["## Single-task suite", "",
                  f"- architectures: {', '.join(suite['architectures'])}",
                  f"- tasks: {', '.join(suite['tasks'])}",
                  f"- seeds: {suite['seeds']}",
                  f"- failed cells: {suite['errors']}", "",
                  "| seed | architecture | TA-N-AUC |", "| --- | --- | --- |"]
        for seed in sorted(suite["ta_n_auc"]):
            scores = suite["ta_n_auc"][seed]
            if scores is None:
                lines.append(f"| {seed} | (incomplete) | |")
                continue
            for arch in sorted(scores, key=lambda a: -scores[a]):
                lines.append(f"| {seed} | {arch} | {scores[arch]:.4f} |")
        lines.append("")
    switch_path = os.path.join(out_dir, "switch.json")
    if os.path.exists(switch_path):
        switch = read_json(switch_path)
        lines += ["## Task switches", "",
                  f"- pairs: {switch['pairs']}",
                  f"- seeds: {switch['seeds']}",
                  f"- failed records: {switch['errors']}", "",
                  "| pair | base | switch | seed | mode | RGain | TGain | reuse(old) |",
                  "| --- | --- | --- | --- | --- | --- | --- | --- |"]
        for r in switch["records"]:
            if "error" in r:
                lines.append(f"| {r['pair']} | | | {r['seed']} | | error | | |")
                continue
            for mode, entry in sorted(r["modes"].items()):
                reuse = entry["reuse"]["old_module"]
                lines.append(
                    f"| {r['pair']} | {r['base_task']} | {r['switch_task']} | {r['seed']} "
                    f"| {mode} | {entry.get('rgain', float('nan')):.4f} "
                    f"| {entry.get('tgain', float('nan')):.2e} "
                    f"| {reuse if reuse is None else round(reuse, 4)} |"
                )
        lines.append("")
    if len(lines) == 2:
        raise InputError(f"no suite.json or switch.json under {out_dir}")
    path = os.path.join(out_dir, "report.md")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path
