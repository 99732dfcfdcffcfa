"""Task programs: stimulus-response, match-to-sample, localization, scene MTS.

Every program is a small trial state machine. step(action, rng) scores the
action against the current frame, then emits the next frame. Rewards are
always in [0, 1] and each action earns exactly one reward. Screen-region
membership uses half-open intervals: left/top edges inclusive, right/bottom
exclusive.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, InputError
from .images import ImageBank, LabeledImage, render_scene

# Match-screen layout constants at the reference 224-px scale: 100x100 template
# buttons, 6 px edge buffer, 12 px between adjacent buttons (6+100+12+100+6=224).
REF_SCREEN = 224
REF_TEMPLATE = 100
REF_EDGE = 6
REF_ADJACENT = 12

TASK_IDS = (
    "sr2",                      # 1
    "sr4-double",               # 2
    "sr4-quadrant",             # 3
    "mts2-stationary",          # 4
    "mts2-horizflip",           # 5
    "mts2-vertmotion",          # 6
    "mts2-vertmotion-horizflip",  # 7
    "mts4-2shown",              # 8
    "mts4-2shown-vertmotion",   # 9
    "mts4-4shown-stationary",   # 10
    "mts4-4shown-permuted",     # 11
    "loc",                      # 12
    "scene-mts",                # 13
)


def variant_number(task_id: str) -> int:
    return TASK_IDS.index(task_id) + 1


def iou(box_a, box_b) -> float:
    """Intersection over union of half-open boxes (x0, y0, x1, y1)."""
    ax0, ay0, ax1, ay1 = box_a
    bx0, by0, bx1, by1 = box_b
    if ax1 <= ax0 or ay1 <= ay0 or bx1 <= bx0 or by1 <= by0:
        raise InputError("degenerate box")
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = max(0, iw) * max(0, ih)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def scaled(value: int, size: int) -> int:
    return int(round(value * size / REF_SCREEN))


def match_layout(size: int):
    """Scaled layout: template edge, x and y origins for 2-slot and 2x2 arrangements."""
    tpl = scaled(REF_TEMPLATE, size)
    near = scaled(REF_EDGE, size)
    far = scaled(REF_EDGE + REF_TEMPLATE + REF_ADJACENT, size)
    center = (size - tpl) // 2
    return {"tpl": tpl, "near": near, "far": far, "center": center}


# --- screen regions -------------------------------------------------------

REGION_NAMES = ("left", "right", "tl", "tr", "bl", "br")


def in_region(region: str, x: int, y: int, size: int) -> bool:
    half = size // 2
    if region == "left":
        return x < half
    if region == "right":
        return x >= half
    if region == "tl":
        return x < half and y < half
    if region == "tr":
        return x >= half and y < half
    if region == "bl":
        return x < half and y >= half
    if region == "br":
        return x >= half and y >= half
    raise ConfigurationError(f"unknown region {region!r}")


REWARD_TRANSFORMS = ("none", "reversal", "squeeze", "rotate90")

_OPPOSITE_REGION = {
    "left": "right",
    "right": "left",
    "tl": "br",
    "br": "tl",
    "tr": "bl",
    "bl": "tr",
}


def apply_reward_transform(transform, member_fn, x, y, size):
    """Wrap a membership test per the switch-task reward transforms."""
    if transform == "none":
        return member_fn(x, y)
    if transform == "squeeze":
        # No reward anywhere in the bottom half.
        return member_fn(x, y) and y < size // 2
    if transform == "rotate90":
        # Right becomes up: a touch maps onto the pre-rotation screen.
        rx, ry = size - 1 - y, x
        return member_fn(rx, ry)
    raise ConfigurationError(f"unknown reward transform {transform!r}")


@dataclass
class StepOutcome:
    reward: float
    trial_done: bool
    trial_reward: float | None  # reward of the decision step when trial_done
    correct: bool | None
    next_frame: LabeledImage


class TaskProgram:
    """Base: owns trial state; subclasses implement begin_trial/score."""

    task_id: str
    paradigm: str

    def reset(self, rng) -> LabeledImage:
        raise NotImplementedError

    def step(self, action, rng) -> StepOutcome:
        raise NotImplementedError


def _check_action(action, size):
    x, y = int(action[0]), int(action[1])
    if not (0 <= x < size and 0 <= y < size):
        raise InputError(f"action {action} outside the {size}x{size} grid")
    return x, y


class SRProgram(TaskProgram):
    """One frame per trial; reward for touching the class's assigned region.

    assignment maps class id -> region name. Variants: binary halves, four
    classes on two halves, four classes on quadrants.
    """

    paradigm = "SR"

    def __init__(self, task_id, bank: ImageBank, split, assignment: dict, transform="none"):
        if task_id not in ("sr2", "sr4-double", "sr4-quadrant"):
            raise ConfigurationError(f"not an SR task id: {task_id}")
        if transform not in REWARD_TRANSFORMS:
            raise ConfigurationError(f"unknown transform {transform!r}")
        for region in assignment.values():
            if region not in REGION_NAMES:
                raise ConfigurationError(f"unknown region {region!r}")
        if transform == "reversal":
            # Reversal re-maps each class to the opposite region; the screen
            # geometry itself is untouched.
            assignment = {c: _OPPOSITE_REGION[r] for c, r in assignment.items()}
            transform = "none"
        self.task_id = task_id
        self.bank = bank
        self.split = split
        self.assignment = dict(assignment)
        self.transform = transform
        self.classes = sorted(assignment)
        self._class = None

    def reset(self, rng) -> LabeledImage:
        self._class = self.classes[int(rng.integers(len(self.classes)))]
        return self.bank.sample(self._class, self.split, rng)

    def step(self, action, rng) -> StepOutcome:
        size = self.bank.size
        x, y = _check_action(action, size)
        region = self.assignment[self._class]
        hit = apply_reward_transform(
            self.transform, lambda ax, ay: in_region(region, ax, ay, size), x, y, size
        )
        reward = 1.0 if hit else 0.0
        return StepOutcome(reward, True, reward, bool(hit), self.reset(rng))


@dataclass
class _Slot:
    rect: tuple  # (x0, y0, x1, y1) half-open
    class_id: int


class MTSProgram(TaskProgram):
    """Two-phase trials: a sample screen (any touch advances, no reward), then a
    match screen of template buttons; reward 1 for touching the button of the
    sample's class.
    """

    paradigm = "MTS"

    VARIANTS = {
        "mts2-stationary": dict(n_classes=2, n_shown=2, horiz_flip=False, vert_motion=False, permuted=False),
        "mts2-horizflip": dict(n_classes=2, n_shown=2, horiz_flip=True, vert_motion=False, permuted=False),
        "mts2-vertmotion": dict(n_classes=2, n_shown=2, horiz_flip=False, vert_motion=True, permuted=False),
        "mts2-vertmotion-horizflip": dict(n_classes=2, n_shown=2, horiz_flip=True, vert_motion=True, permuted=False),
        "mts4-2shown": dict(n_classes=4, n_shown=2, horiz_flip=True, vert_motion=False, permuted=False),
        "mts4-2shown-vertmotion": dict(n_classes=4, n_shown=2, horiz_flip=True, vert_motion=True, permuted=False),
        "mts4-4shown-stationary": dict(n_classes=4, n_shown=4, horiz_flip=False, vert_motion=False, permuted=False),
        "mts4-4shown-permuted": dict(n_classes=4, n_shown=4, horiz_flip=False, vert_motion=False, permuted=True),
    }

    def __init__(self, task_id, bank: ImageBank, split, class_set=None):
        if task_id not in self.VARIANTS:
            raise ConfigurationError(f"not an MTS task id: {task_id}")
        self.task_id = task_id
        self.flags = self.VARIANTS[task_id]
        self.bank = bank
        self.split = split
        self.classes = list(class_set) if class_set else list(range(self.flags["n_classes"]))
        if len(self.classes) != self.flags["n_classes"]:
            raise ConfigurationError(
                f"{task_id} needs {self.flags['n_classes']} classes, got {len(self.classes)}"
            )
        self.layout = match_layout(bank.size)
        self._phase = "sample"
        self._class = None
        self._slots = []
        self._screen_cache = {}

    def reset(self, rng) -> LabeledImage:
        self._phase = "sample"
        self._class = self.classes[int(rng.integers(len(self.classes)))]
        return self.bank.sample(self._class, self.split, rng)

    def _slot_positions(self, n, rng):
        lay = self.layout
        tpl, near, far, center = lay["tpl"], lay["near"], lay["far"], lay["center"]
        if n == 2:
            ys = [center, center]
            if self.flags["vert_motion"]:
                hi = self.bank.size - near - tpl
                ys = [int(rng.integers(near, hi + 1)), int(rng.integers(near, hi + 1))]
            return [(near, ys[0]), (far, ys[1])]
        return [(near, near), (far, near), (near, far), (far, far)]  # TL, TR, BL, BR

    def _choose_shown(self, rng):
        flags = self.flags
        if flags["n_shown"] == 2:
            others = [c for c in self.classes if c != self._class]
            distractor = others[int(rng.integers(len(others)))]
            pair = [self._class, distractor]
            if flags["horiz_flip"]:
                if rng.integers(2):
                    pair.reverse()
            else:
                # Stationary: each class keeps its fixed side (order by class id).
                pair = sorted(pair, key=self.classes.index)
            return pair
        order = list(self.classes)
        if flags["permuted"]:
            order = [order[i] for i in rng.permutation(len(order))]
        return order

    def _compose_match(self, shown, positions) -> tuple:
        key = (tuple(shown), tuple(positions))
        if key in self._screen_cache:
            return self._screen_cache[key]
        size, tpl = self.bank.size, self.layout["tpl"]
        pixels = np.full((size, size, 3), 0.10)
        slots = []
        for cid, (sx, sy) in zip(shown, positions):
            template = self.bank.template(cid, tpl)
            pixels[sy : sy + tpl, sx : sx + tpl] = template.pixels
            slots.append(_Slot((sx, sy, sx + tpl, sy + tpl), cid))
        img = LabeledImage(pixels=pixels, class_id=None)
        if len(self._screen_cache) < 512:
            self._screen_cache[key] = (img, slots)
        return img, slots

    def step(self, action, rng) -> StepOutcome:
        size = self.bank.size
        x, y = _check_action(action, size)
        if self._phase == "sample":
            shown = self._choose_shown(rng)
            positions = self._slot_positions(len(shown), rng)
            frame, self._slots = self._compose_match(shown, positions)
            self._phase = "match"
            return StepOutcome(0.0, False, None, None, frame)
        correct = False
        for slot in self._slots:
            x0, y0, x1, y1 = slot.rect
            if x0 <= x < x1 and y0 <= y < y1 and slot.class_id == self._class:
                correct = True
                break
        reward = 1.0 if correct else 0.0
        return StepOutcome(reward, True, reward, correct, self.reset(rng))


class LOCProgram(TaskProgram):
    """Two touches mark opposite corners of the target's bounding box; the
    second touch scores IoU against ground truth. Corners may arrive in either
    diagonal order; the touched pixels count as inside the predicted box.
    """

    paradigm = "LOC"
    task_id = "loc"

    def __init__(self, bank: ImageBank, split, class_set=None, distractors=3):
        self.bank = bank
        self.split = split
        self.classes = list(class_set) if class_set else list(range(bank.n_classes))
        self.distractors = distractors
        self._gt_box = None
        self._first = None
        self._frame = None

    def reset(self, rng) -> LabeledImage:
        from .images import render_class_instance, sample_pose

        cid = self.classes[int(rng.integers(len(self.classes)))]
        pose = sample_pose(rng, self.bank.size, scale_lo=0.12, scale_hi=0.32)
        frame = render_class_instance(
            cid, pose, seed=int(rng.integers(2**31)), size=self.bank.size,
            distractors=self.distractors,
        )
        self._gt_box = frame.instances[0].bbox
        self._first = None
        self._frame = frame
        return frame

    def step(self, action, rng) -> StepOutcome:
        x, y = _check_action(action, self.bank.size)
        if self._first is None:
            self._first = (x, y)
            return StepOutcome(0.0, False, None, None, self._frame)
        x0, x1 = sorted((self._first[0], x))
        y0, y1 = sorted((self._first[1], y))
        pred = (x0, y0, x1 + 1, y1 + 1)  # touched pixels are inside the box
        reward = float(iou(pred, self._gt_box))
        return StepOutcome(reward, True, reward, reward > 0.5, self.reset(rng))


class SceneMTSProgram(TaskProgram):
    """Inverted MTS at scene scale: the sample screen shows a class template;
    the match screen is a multi-instance scene; reward for touching any visible
    pixel of a correct-class instance.
    """

    paradigm = "SCENE-MTS"
    task_id = "scene-mts"

    def __init__(self, bank: ImageBank, split, class_set=None, min_instances=3, max_instances=6):
        self.bank = bank
        self.split = split
        self.classes = list(class_set) if class_set else list(range(bank.n_classes))
        self.min_instances = min_instances
        self.max_instances = max_instances
        self._phase = "sample"
        self._class = None
        self._scene = None

    def reset(self, rng) -> LabeledImage:
        self._phase = "sample"
        self._class = self.classes[int(rng.integers(len(self.classes)))]
        size = self.bank.size
        tpl = self.bank.template(self._class, match_layout(size)["tpl"])
        pixels = np.full((size, size, 3), 0.10)
        off = (size - tpl.pixels.shape[0]) // 2
        pixels[off : off + tpl.pixels.shape[0], off : off + tpl.pixels.shape[1]] = tpl.pixels
        return LabeledImage(pixels=pixels, class_id=self._class)

    def step(self, action, rng) -> StepOutcome:
        size = self.bank.size
        x, y = _check_action(action, size)
        if self._phase == "sample":
            n = int(rng.integers(self.min_instances, self.max_instances + 1))
            others = [c for c in self.classes if c != self._class]
            extra = [others[int(rng.integers(len(others)))] for _ in range(n - 1)]
            self._scene = render_scene(
                [self._class] + extra, seed=int(rng.integers(2**31)), size=size
            )
            # The target must have survived placement; retry the rare failure.
            while not any(inst.class_id == self._class for inst in self._scene.instances):
                self._scene = render_scene(
                    [self._class] + extra, seed=int(rng.integers(2**31)), size=size
                )
            self._phase = "match"
            return StepOutcome(0.0, False, None, None, self._scene)
        correct = any(
            inst.class_id == self._class and inst.mask[y, x] for inst in self._scene.instances
        )
        reward = 1.0 if correct else 0.0
        return StepOutcome(reward, True, reward, correct, self.reset(rng))


DEFAULT_SR_ASSIGNMENTS = {
    "sr2": {0: "left", 1: "right"},
    "sr4-double": {0: "left", 1: "right", 2: "left", 3: "right"},
    "sr4-quadrant": {0: "tl", 1: "tr", 2: "bl", 3: "br"},
}


def build_task_program(task_cfg: dict, bank: ImageBank, split: str) -> TaskProgram:
    """Construct a program from a config dict: {task, class_set?, assignment?, transform?}."""
    task_id = task_cfg["task"]
    if task_id not in TASK_IDS:
        raise ConfigurationError(f"unknown task id {task_id!r}")
    class_set = task_cfg.get("class_set")
    if task_id.startswith("sr"):
        assignment = task_cfg.get("assignment")
        if assignment is None:
            default = DEFAULT_SR_ASSIGNMENTS[task_id]
            ids = class_set if class_set else sorted(default)
            assignment = {cid: default[k] for cid, k in zip(ids, sorted(default))}
        else:
            assignment = {int(k): v for k, v in assignment.items()}
        return SRProgram(task_id, bank, split, assignment, task_cfg.get("transform", "none"))
    if task_id.startswith("mts"):
        return MTSProgram(task_id, bank, split, class_set)
    if task_id == "loc":
        return LOCProgram(bank, split, class_set, distractors=task_cfg.get("distractors", 3))
    return SceneMTSProgram(bank, split, class_set)
