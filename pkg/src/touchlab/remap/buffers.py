"""Fixed-length history of scene encodings and executed actions.

The buffer holds the last k_b+1 frame encodings and the last k_b actions,
zero-padded with validity bits before the stream has run long enough. It owns
the normalized input layout every module consumes: the visual vector is the
scene history plus one validity bit per slot, and each candidate's action row
is the executed-action history (x, y, validity per slot) followed by the
candidate's own normalized coordinates.
"""

from collections import deque

import numpy as np

from ..zoo.perfect import normalize_coord


class HistoryBuffer:
    def __init__(self, k_b: int, scene_width: int, size: int, spatial_shape=None):
        self.k_b = k_b
        self.scene_width = scene_width
        self.size = size
        self.spatial_shape = spatial_shape
        self.scenes = deque(
            [(np.zeros(scene_width), 0.0) for _ in range(k_b + 1)], maxlen=k_b + 1
        )
        self.actions = deque([(0.0, 0.0, 0.0) for _ in range(k_b)], maxlen=k_b)
        self.spatial = None if spatial_shape is None else np.zeros(spatial_shape)

    def push_frame(self, encoding):
        """Append a frame encoding (oldest scene drops off)."""
        self.scenes.append((np.asarray(encoding.scene, dtype=np.float64), 1.0))
        if self.spatial_shape is not None:
            self.spatial = np.asarray(encoding.spatial, dtype=np.float64)

    def push_action(self, pixel):
        x = normalize_coord(int(pixel[0]), self.size)
        y = normalize_coord(int(pixel[1]), self.size)
        self.actions.append((x, y, 1.0))

    def visual_vector(self) -> np.ndarray:
        scenes = [s for s, _ in self.scenes]
        valid = [v for _, v in self.scenes]
        return np.concatenate(scenes + [np.asarray(valid)])

    def conv_visual(self):
        scenes = np.stack([s for s, _ in self.scenes])
        valid = np.asarray([v for _, v in self.scenes])
        return self.spatial, scenes, valid

    def visual_input(self, module_config):
        if getattr(module_config, "conv", False):
            return self.conv_visual()
        return self.visual_vector()

    def visual_snapshot(self, module_config):
        """A defensive copy of visual_input for deferred training replay."""
        if getattr(module_config, "conv", False):
            spatial, scenes, valid = self.conv_visual()
            return spatial.copy(), scenes.copy(), valid.copy()
        return self.visual_vector().copy()

    def action_rows(self, candidates) -> np.ndarray:
        """(N, 3*k_b + 2) rows: action history then the candidate's coords."""
        candidates = np.asarray(candidates)
        n = candidates.shape[0]
        hist = np.asarray([v for triple in self.actions for v in triple])
        rows = np.empty((n, 3 * self.k_b + 2))
        rows[:, : 3 * self.k_b] = hist
        rows[:, 3 * self.k_b] = [normalize_coord(int(x), self.size) for x in candidates[:, 0]]
        rows[:, 3 * self.k_b + 1] = [normalize_coord(int(y), self.size) for y in candidates[:, 1]]
        return rows

    def reset(self):
        """Zero everything back to the cold-start state."""
        for _ in range(self.k_b + 1):
            self.scenes.append((np.zeros(self.scene_width), 0.0))
        for _ in range(self.k_b):
            self.actions.append((0.0, 0.0, 0.0))
        if self.spatial_shape is not None:
            self.spatial = np.zeros(self.spatial_shape)
