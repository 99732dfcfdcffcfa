"""Rasterize predicted reward maps into portable image files.

The policy evaluates a sparse candidate set, so the screen grid is filled by
nearest sampled candidate (ties go to the earlier candidate). Values use a
fixed blue-low/red-high ramp. One panel per prediction horizon column,
separated by a thin white gutter.
"""

import numpy as np
from PIL import Image

from ..errors import InputError

RAMP_LOW = np.array([40.0, 40.0, 220.0])
RAMP_HIGH = np.array([220.0, 40.0, 40.0])
GUTTER = 2


def rasterize_field(candidates, values, size: int) -> np.ndarray:
    """Fill a size x size grid with each pixel's nearest candidate value."""
    candidates = np.asarray(candidates, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if candidates.ndim != 2 or candidates.shape[1] != 2 or len(candidates) == 0:
        raise InputError("candidates must be a non-empty (N, 2) array")
    if len(values) != len(candidates):
        raise InputError("one value per candidate required")
    ys, xs = np.divmod(np.arange(size * size), size)
    pixels = np.stack([xs, ys], axis=1).astype(np.float64)
    d2 = ((pixels[:, None, :] - candidates[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argmin(d2, axis=1)
    return values[nearest].reshape(size, size)


def colorize(field: np.ndarray) -> np.ndarray:
    """Map a [0, 1] field onto the blue-to-red ramp as uint8 RGB."""
    v = np.clip(np.asarray(field, dtype=np.float64), 0.0, 1.0)[..., None]
    rgb = (1.0 - v) * RAMP_LOW + v * RAMP_HIGH
    return np.rint(rgb).astype(np.uint8)


def render_reward_map(sample, size: int, path: str, upscale: int = 4) -> str:
    """Write one panel per map column of a policy sample as a PNG file."""
    maps = 1.0 / (1.0 + np.exp(-np.asarray(sample.logits, dtype=np.float64)))
    panels = [
        colorize(rasterize_field(sample.candidates, maps[:, j], size))
        for j in range(maps.shape[1])
    ]
    gutter = np.full((size, GUTTER, 3), 255, dtype=np.uint8)
    strips = []
    for j, panel in enumerate(panels):
        if j:
            strips.append(gutter)
        strips.append(panel)
    sheet = np.concatenate(strips, axis=1)
    image = Image.fromarray(sheet, mode="RGB")
    if upscale > 1:
        image = image.resize(
            (sheet.shape[1] * upscale, sheet.shape[0] * upscale), Image.NEAREST
        )
    try:
        image.save(path, format="PNG")
    except OSError as exc:
        raise InputError(f"cannot write map image to {path}: {exc}") from exc
    return path


def render_grid_maps(grid_maps, size: int, path: str, upscale: int = 4) -> str:
    """Render a dense (size, size, k_f) stack of map values the same way."""
    maps = np.asarray(grid_maps, dtype=np.float64)
    if maps.ndim != 3 or maps.shape[:2] != (size, size):
        raise InputError(f"expected a ({size}, {size}, k) map stack")
    fields = [maps[:, :, j] for j in range(maps.shape[2])]
    gutter = np.full((size, GUTTER, 3), 255, dtype=np.uint8)
    strips = []
    for j, field in enumerate(fields):
        if j:
            strips.append(gutter)
        strips.append(colorize(field))
    sheet = np.concatenate(strips, axis=1)
    image = Image.fromarray(sheet, mode="RGB")
    if upscale > 1:
        image = image.resize(
            (sheet.shape[1] * upscale, sheet.shape[0] * upscale), Image.NEAREST
        )
    try:
        image.save(path, format="PNG")
    except OSError as exc:
        raise InputError(f"cannot write map image to {path}: {exc}") from exc
    return path
