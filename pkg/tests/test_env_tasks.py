"""Task-program contracts: regions, trials, layouts, IoU, transforms."""

import numpy as np
import pytest

from touchlab.env import (
    ImageBank,
    LOCProgram,
    MTSProgram,
    SRProgram,
    SceneMTSProgram,
    TASK_IDS,
    build_task_program,
    in_region,
    iou,
    match_layout,
    variant_number,
)
from touchlab.errors import ConfigurationError, InputError


@pytest.fixture(scope="module")
def bank():
    return ImageBank(train_per_class=6, val_per_class=3, seed=0)


def brute_force_iou(a, b):
    size = max(a[2], a[3], b[2], b[3]) + 1
    ga = np.zeros((size, size), dtype=bool)
    gb = np.zeros((size, size), dtype=bool)
    ga[a[1] : a[3], a[0] : a[2]] = True
    gb[b[1] : b[3], b[0] : b[2]] = True
    return (ga & gb).sum() / (ga | gb).sum()


def test_iou_matches_pixel_count_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        def rand_box():
            x0, y0 = rng.integers(0, 50, size=2)
            w, h = rng.integers(1, 40, size=2)
            return (int(x0), int(y0), int(x0 + w), int(y0 + h))

        a, b = rand_box(), rand_box()
        assert abs(iou(a, b) - brute_force_iou(a, b)) < 1e-12


def test_iou_identity_disjoint_symmetry():
    a = (0, 0, 10, 10)
    assert iou(a, a) == 1.0
    assert iou(a, (10, 0, 20, 10)) == 0.0
    b = (5, 0, 15, 10)
    assert iou(a, b) == iou(b, a) == pytest.approx(50 / 150)
    with pytest.raises(InputError):
        iou((0, 0, 0, 10), a)


def test_variant_numbering_covers_13():
    assert len(TASK_IDS) == 13
    assert variant_number("sr2") == 1
    assert variant_number("mts2-stationary") == 4
    assert variant_number("loc") == 12
    assert variant_number("scene-mts") == 13


def test_region_half_open_boundaries():
    # Pixel 32 of a 64 screen belongs to the right/bottom halves.
    assert in_region("left", 31, 0, 64) and not in_region("left", 32, 0, 64)
    assert in_region("right", 32, 0, 64)
    assert in_region("tl", 31, 31, 64) and not in_region("tl", 31, 32, 64)
    assert in_region("br", 32, 32, 64)


def test_layout_constants_at_reference_scale():
    lay = match_layout(224)
    assert lay["tpl"] == 100
    assert lay["near"] == 6
    assert lay["far"] == 118
    # 2x2 grid exactly fills the screen line: 6 + 100 + 12 + 100 + 6 = 224.
    assert lay["far"] + lay["tpl"] + 6 == 224


def test_layout_scales_without_overlap():
    lay = match_layout(64)
    assert lay["near"] + lay["tpl"] <= lay["far"]
    assert lay["far"] + lay["tpl"] <= 64


def test_sr2_rewards_assigned_half(bank):
    prog = SRProgram("sr2", bank, "train", {0: "left", 1: "right"})
    rng = np.random.default_rng(1)
    prog.reset(rng)
    hits = 0
    for _ in range(50):
        cls = prog._class
        x = 5 if prog.assignment[cls] == "left" else 60
        out = prog.step((x, 32), rng)
        assert out.reward == 1.0 and out.trial_done
        hits += 1
        wrong_x = 60 if prog.assignment[prog._class] == "left" else 5
        out = prog.step((wrong_x, 32), rng)
        assert out.reward == 0.0
    assert hits == 50


def test_sr_action_domain(bank):
    prog = SRProgram("sr2", bank, "train", {0: "left", 1: "right"})
    rng = np.random.default_rng(2)
    prog.reset(rng)
    with pytest.raises(InputError):
        prog.step((64, 0), rng)


def test_sr_transform_reversal(bank):
    rev = SRProgram("sr2", bank, "train", {0: "left", 1: "right"}, transform="reversal")
    assert rev.assignment == {0: "right", 1: "left"}
    quad = SRProgram(
        "sr4-quadrant",
        bank,
        "train",
        {0: "tl", 1: "tr", 2: "bl", 3: "br"},
        transform="reversal",
    )
    assert quad.assignment == {0: "br", 1: "bl", 2: "tr", 3: "tl"}


def test_sr_transform_squeeze(bank):
    prog = SRProgram("sr2", bank, "train", {0: "left", 1: "right"}, transform="squeeze")
    rng = np.random.default_rng(3)
    prog.reset(rng)
    cls = prog._class
    x = 5 if prog.assignment[cls] == "left" else 60
    out = prog.step((x, 10), rng)  # top half: rewarded
    assert out.reward == 1.0
    cls = prog._class
    x = 5 if prog.assignment[cls] == "left" else 60
    out = prog.step((x, 50), rng)  # bottom half: never rewarded
    assert out.reward == 0.0


def test_sr_transform_rotate90(bank):
    # Right becomes up: class assigned "right" now pays on the top half.
    prog = SRProgram("sr2", bank, "train", {0: "left", 1: "right"}, transform="rotate90")
    rng = np.random.default_rng(4)
    prog.reset(rng)
    for _ in range(20):
        cls = prog._class
        if prog.assignment[cls] == "right":
            out = prog.step((32, 5), rng)  # top touch maps to right half
        else:
            out = prog.step((32, 60), rng)
        assert out.reward == 1.0


def test_mts_two_phase_and_correct_slot(bank):
    prog = MTSProgram("mts2-stationary", bank, "train")
    rng = np.random.default_rng(5)
    prog.reset(rng)
    for _ in range(30):
        sample_class = prog._class
        out = prog.step((0, 0), rng)  # any touch advances the sample screen
        assert out.reward == 0.0 and not out.trial_done
        slot = next(s for s in prog._slots if s.class_id == sample_class)
        x0, y0, x1, y1 = slot.rect
        out = prog.step(((x0 + x1) // 2, (y0 + y1) // 2), rng)
        assert out.reward == 1.0 and out.trial_done


def test_mts_between_buttons_pays_zero(bank):
    prog = MTSProgram("mts2-stationary", bank, "train")
    rng = np.random.default_rng(6)
    prog.reset(rng)
    prog.step((0, 0), rng)
    gap_x = (prog.layout["near"] + prog.layout["tpl"] + prog.layout["far"]) // 2
    out = prog.step((gap_x, 32), rng)
    assert out.reward == 0.0 and out.trial_done


def test_mts_slots_disjoint_all_variants(bank):
    rng = np.random.default_rng(7)
    for task_id in MTSProgram.VARIANTS:
        prog = MTSProgram(task_id, bank, "train")
        prog.reset(rng)
        for _ in range(20):
            out = prog.step((0, 0), rng)
            rects = [s.rect for s in prog._slots]
            for i in range(len(rects)):
                for j in range(i + 1, len(rects)):
                    ax0, ay0, ax1, ay1 = rects[i]
                    bx0, by0, bx1, by1 = rects[j]
                    overlap = max(0, min(ax1, bx1) - max(ax0, bx0)) * max(
                        0, min(ay1, by1) - max(ay0, by0)
                    )
                    assert overlap == 0
            prog.step((0, 0), rng)


def test_mts_stationary_sides_fixed(bank):
    prog = MTSProgram("mts2-stationary", bank, "train")
    rng = np.random.default_rng(8)
    prog.reset(rng)
    sides = {}
    for _ in range(40):
        prog.step((0, 0), rng)
        for slot in prog._slots:
            sides.setdefault(slot.class_id, set()).add(slot.rect[0])
        prog.step((0, 0), rng)
    assert all(len(xs) == 1 for xs in sides.values())


def test_mts_horizflip_swaps_sides(bank):
    prog = MTSProgram("mts2-horizflip", bank, "train")
    rng = np.random.default_rng(9)
    prog.reset(rng)
    sides = {}
    for _ in range(60):
        prog.step((0, 0), rng)
        for slot in prog._slots:
            sides.setdefault(slot.class_id, set()).add(slot.rect[0])
        prog.step((0, 0), rng)
    assert any(len(xs) == 2 for xs in sides.values())


def test_mts_permuted_slot_frequencies(bank):
    # Permutation oracle: each template lands on each slot about 1/4 of trials.
    prog = MTSProgram("mts4-4shown-permuted", bank, "train")
    rng = np.random.default_rng(11)
    prog.reset(rng)
    counts = np.zeros((4, 4))
    slots_order = None
    trials = 1000
    for _ in range(trials):
        prog.step((0, 0), rng)
        rects = sorted(s.rect for s in prog._slots)
        if slots_order is None:
            slots_order = {r: i for i, r in enumerate(rects)}
        for slot in prog._slots:
            counts[slot.class_id, slots_order[slot.rect]] += 1
        prog.step((0, 0), rng)
    freq = counts / trials
    assert np.all(np.abs(freq - 0.25) < 0.03)


def test_mts_4shown_stationary_is_fixed(bank):
    prog = MTSProgram("mts4-4shown-stationary", bank, "train")
    rng = np.random.default_rng(11)
    prog.reset(rng)
    layouts = set()
    for _ in range(20):
        prog.step((0, 0), rng)
        layouts.add(tuple((s.class_id, s.rect) for s in sorted(prog._slots, key=lambda s: s.rect)))
        prog.step((0, 0), rng)
    assert len(layouts) == 1


def test_mts_trial_terminates_within_horizon(bank):
    # Sample screen then decision: the trial ends within k_f=2 steps.
    prog = MTSProgram("mts2-stationary", bank, "train")
    rng = np.random.default_rng(12)
    prog.reset(rng)
    out = prog.step((0, 0), rng)
    assert not out.trial_done
    out = prog.step((0, 0), rng)
    assert out.trial_done


def test_loc_two_touch_iou(bank):
    prog = LOCProgram(bank, "train", distractors=2)
    rng = np.random.default_rng(13)
    prog.reset(rng)
    gt = prog._gt_box
    out = prog.step((gt[0], gt[1]), rng)
    assert out.reward == 0.0 and not out.trial_done
    out = prog.step((gt[2] - 1, gt[3] - 1), rng)
    assert out.reward == 1.0 and out.trial_done


def test_loc_corner_order_free(bank):
    prog = LOCProgram(bank, "train")
    rng = np.random.default_rng(14)
    prog.reset(rng)
    gt = prog._gt_box
    # Upper-right then lower-left diagonal.
    prog.step((gt[2] - 1, gt[1]), rng)
    out = prog.step((gt[0], gt[3] - 1), rng)
    assert out.reward == 1.0


def test_loc_disjoint_box_zero(bank):
    prog = LOCProgram(bank, "train")
    rng = np.random.default_rng(15)
    prog.reset(rng)
    gt = prog._gt_box
    # A 1-pixel box in a corner far from the target.
    x = 0 if gt[0] > 16 else 63
    y = 0 if gt[1] > 16 else 63
    prog.step((x, y), rng)
    out = prog.step((x, y), rng)
    assert out.reward == 0.0


def test_scene_mts_reward_membership(bank):
    prog = SceneMTSProgram(bank, "train")
    rng = np.random.default_rng(16)
    prog.reset(rng)
    for _ in range(10):
        target = prog._class
        prog.step((0, 0), rng)
        scene = prog._scene
        good = next(i for i in scene.instances if i.class_id == target)
        ys, xs = np.nonzero(good.mask)
        out = prog.step((int(xs[0]), int(ys[0])), rng)
        assert out.reward == 1.0 and out.trial_done


def test_scene_mts_wrong_instance_and_background(bank):
    prog = SceneMTSProgram(bank, "train")
    rng = np.random.default_rng(17)
    prog.reset(rng)
    target = prog._class
    prog.step((0, 0), rng)
    scene = prog._scene
    covered = np.zeros((64, 64), dtype=bool)
    for inst in scene.instances:
        covered |= inst.mask
    wrong = [i for i in scene.instances if i.class_id != target]
    if wrong:
        ys, xs = np.nonzero(wrong[0].mask)
        assert prog.step((int(xs[0]), int(ys[0])), rng).reward == 0.0
        prog.step((0, 0), rng)  # advance past the new sample screen
    ys, xs = np.nonzero(~covered)
    assert prog.step((int(xs[0]), int(ys[0])), rng).reward == 0.0


def test_build_task_program_registry(bank):
    for task_id in TASK_IDS:
        prog = build_task_program({"task": task_id}, bank, "train")
        assert prog.task_id == task_id
    with pytest.raises(ConfigurationError):
        build_task_program({"task": "nope"}, bank, "train")
