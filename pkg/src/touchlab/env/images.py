"""Procedural synthetic imagery: class instances, templates, scenes.

Eight classes on a shape x color grid stand in for a real image dataset. Every
render is a pure function of (class, pose, seed); instances carry ground-truth
masks and tight bounding boxes. Boxes use half-open pixel conventions
(x0, y0, x1, y1) so box area equals mask pixel count for solid rectangles.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError

SHAPES = ("disk", "square", "triangle", "cross")
COLOR_NAMES = ("red", "green", "blue", "yellow")
COLORS = {
    "red": (0.85, 0.20, 0.20),
    "green": (0.20, 0.78, 0.28),
    "blue": (0.25, 0.38, 0.88),
    "yellow": (0.88, 0.84, 0.22),
}
N_CLASSES = 8


def class_shape_color(class_id: int):
    """Class k -> (shape, color). Classes 4-7 reuse shapes with shifted colors."""
    if not 0 <= class_id < N_CLASSES:
        raise InputError(f"unknown class id {class_id}")
    shape = SHAPES[class_id % 4]
    color = COLOR_NAMES[(class_id % 4 + 2 * (class_id // 4)) % 4]
    return shape, color


@dataclass
class InstanceRecord:
    class_id: int
    mask: np.ndarray  # (H, W) bool, visible pixels
    bbox: tuple  # (x0, y0, x1, y1) half-open tight box of mask


@dataclass
class LabeledImage:
    pixels: np.ndarray  # (H, W, 3) in [0, 1]
    class_id: int | None
    instances: list = field(default_factory=list)
    digest: str = ""

    def __post_init__(self):
        if not self.digest:
            self.digest = hashlib.blake2b(self.pixels.tobytes(), digest_size=16).hexdigest()


@dataclass(frozen=True)
class Pose:
    cx: float
    cy: float
    scale: float  # circumradius in pixels
    rotation: float  # radians


def tight_bbox(mask: np.ndarray) -> tuple:
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        raise InputError("empty mask has no bounding box")
    return (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def smooth_noise(rng, size, cells=8, lo=0.0, hi=0.25):
    """Bilinearly upsampled random grid: a cheap smooth background."""
    g = rng.uniform(size=(cells + 1, cells + 1))
    xs = np.linspace(0.0, cells, size, endpoint=False)
    i = np.minimum(xs.astype(int), cells - 1)
    f = xs - i
    rows = g[i, :] * (1.0 - f)[:, None] + g[i + 1, :] * f[:, None]
    grid = rows[:, i] * (1.0 - f)[None, :] + rows[:, i + 1] * f[None, :]
    return lo + (hi - lo) * grid


def _shape_mask(shape, size, pose: Pose):
    yy, xx = np.mgrid[0:size, 0:size]
    u = xx - pose.cx
    v = yy - pose.cy
    c, s = np.cos(pose.rotation), np.sin(pose.rotation)
    ur = u * c + v * s
    vr = -u * s + v * c
    r = pose.scale
    if shape == "disk":
        return ur * ur + vr * vr <= r * r
    if shape == "square":
        half = r * 0.78
        return (np.abs(ur) <= half) & (np.abs(vr) <= half)
    if shape == "triangle":
        # Vertices at angle 90, 210, 330 degrees on the circumcircle.
        verts = [(r * np.cos(a), r * np.sin(a)) for a in (np.pi / 2, np.pi * 7 / 6, np.pi * 11 / 6)]
        inside = np.ones((size, size), dtype=bool)
        for k in range(3):
            x0, y0 = verts[k]
            x1, y1 = verts[(k + 1) % 3]
            inside &= (x1 - x0) * (vr - y0) - (y1 - y0) * (ur - x0) >= 0
        return inside
    if shape == "cross":
        arm = r * 0.34
        return ((np.abs(ur) <= arm) & (np.abs(vr) <= r)) | (
            (np.abs(vr) <= arm) & (np.abs(ur) <= r)
        )
    raise InputError(f"unknown shape {shape!r}")


def _paint(pixels, mask, color, rng):
    jitter = rng.uniform(-0.06, 0.06, size=3)
    shade = np.clip(np.asarray(color) + jitter, 0.05, 1.0)
    pixels[mask] = shade
    return pixels


def render_class_instance(class_id, pose: Pose, seed, size=64, distractors=0) -> LabeledImage:
    """One class instance on a noise background; optional non-class distractor blobs."""
    shape, color = class_shape_color(class_id)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), class_id, 0x51]))
    pixels = np.empty((size, size, 3))
    base = smooth_noise(rng, size)
    for ch in range(3):
        pixels[:, :, ch] = base * rng.uniform(0.7, 1.0)
    for _ in range(distractors):
        # Soft elliptical blobs; background clutter, never a class shape.
        bx, by = rng.uniform(size * 0.1, size * 0.9, size=2)
        ax_, ay_ = rng.uniform(size * 0.06, size * 0.18, size=2)
        yy, xx = np.mgrid[0:size, 0:size]
        blob = ((xx - bx) / ax_) ** 2 + ((yy - by) / ay_) ** 2 <= 1.0
        pixels[blob] = rng.uniform(0.2, 0.5, size=3)
    mask = _shape_mask(shape, size, pose)
    if not mask.any():
        raise InputError(f"pose leaves class {class_id} entirely off screen")
    _paint(pixels, mask, COLORS[color], rng)
    pixels = np.clip(pixels, 0.0, 1.0)
    return LabeledImage(
        pixels=pixels,
        class_id=class_id,
        instances=[InstanceRecord(class_id, mask, tight_bbox(mask))],
    )


def sample_pose(rng, size, scale_lo=0.16, scale_hi=0.30) -> Pose:
    """A pose keeping the whole shape on screen."""
    scale = rng.uniform(scale_lo * size, scale_hi * size)
    margin = scale + 1.0
    return Pose(
        cx=rng.uniform(margin, size - margin),
        cy=rng.uniform(margin, size - margin),
        scale=scale,
        rotation=rng.uniform(0.0, 2.0 * np.pi),
    )


def render_template(class_id, tpl_px, seed=7) -> LabeledImage:
    """The canonical match-screen button for a class: fixed pose, flat backdrop."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), class_id, 0x7E]))
    shape, color = class_shape_color(class_id)
    pixels = np.full((tpl_px, tpl_px, 3), 0.16)
    pose = Pose(cx=(tpl_px - 1) / 2.0, cy=(tpl_px - 1) / 2.0, scale=tpl_px * 0.40, rotation=0.0)
    mask = _shape_mask(shape, tpl_px, pose)
    _paint(pixels, mask, COLORS[color], rng)
    return LabeledImage(
        pixels=np.clip(pixels, 0.0, 1.0),
        class_id=class_id,
        instances=[InstanceRecord(class_id, mask, tight_bbox(mask))],
    )


def render_scene(class_ids, seed, size=64, max_occlusion=0.3, max_tries=40) -> LabeledImage:
    """Several instances on one screen, each at least (1 - max_occlusion) visible.

    Later instances draw on top; records store each instance's *visible* mask.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5C, len(class_ids)]))
    pixels = np.empty((size, size, 3))
    base = smooth_noise(rng, size)
    for ch in range(3):
        pixels[:, :, ch] = base * rng.uniform(0.7, 1.0)
    placed = []  # (class_id, full mask)
    for cid in class_ids:
        shape, color = class_shape_color(cid)
        for _ in range(max_tries):
            pose = sample_pose(rng, size, scale_lo=0.12, scale_hi=0.20)
            mask = _shape_mask(shape, size, pose)
            if not mask.any():
                continue
            # The newcomer must not hide too much of anyone already placed.
            ok = True
            for _, prev in placed:
                hidden = (prev & mask).sum() / prev.sum()
                if hidden > max_occlusion:
                    ok = False
                    break
            if ok:
                placed.append((cid, mask))
                _paint(pixels, mask, COLORS[color], rng)
                break
    instances = []
    for i, (cid, mask) in enumerate(placed):
        visible = mask.copy()
        for _, later in placed[i + 1 :]:
            visible &= ~later
        if visible.any():
            instances.append(InstanceRecord(cid, visible, tight_bbox(visible)))
    return LabeledImage(pixels=np.clip(pixels, 0.0, 1.0), class_id=None, instances=instances)


class ImageBank:
    """Pre-rendered instance pools with train/val splits, plus cached templates."""

    def __init__(self, size=64, n_classes=N_CLASSES, train_per_class=160, val_per_class=40, seed=0):
        self.size = size
        self.n_classes = n_classes
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA]))
        self.pools = {}
        for cid in range(n_classes):
            for split, count in (("train", train_per_class), ("val", val_per_class)):
                pool = []
                for _ in range(count):
                    pose = sample_pose(rng, size)
                    pool.append(
                        render_class_instance(cid, pose, seed=int(rng.integers(2**31)), size=size)
                    )
                self.pools[(cid, split)] = pool
        self._templates = {}

    def sample(self, class_id, split, rng) -> LabeledImage:
        pool = self.pools.get((class_id, split))
        if pool is None:
            raise InputError(f"no pool for class {class_id} split {split!r}")
        return pool[int(rng.integers(len(pool)))]

    def template(self, class_id, tpl_px) -> LabeledImage:
        key = (class_id, tpl_px)
        if key not in self._templates:
            self._templates[key] = render_template(class_id, tpl_px, seed=self.seed + 7)
        return self._templates[key]

    def classification_arrays(self, split):
        """Stack one split into (images, labels) arrays for classifier training."""
        images, labels = [], []
        for cid in range(self.n_classes):
            pool = self.pools.get((cid, split))
            if pool is None:
                raise InputError(f"no pool for split {split!r}")
            for img in pool:
                images.append(img.pixels)
                labels.append(cid)
        return np.stack(images), np.array(labels)
