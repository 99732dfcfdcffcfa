"""Parameters and the Adam optimizer.

Parameters are persistent leaf tensors. Adam keeps per-parameter first/second
moment state with bias correction; frozen parameters are skipped entirely, so
their values and optimizer state never change.
"""

import numpy as np

from ..errors import ConfigurationError, TrainingError
from .tensor import Tensor


class Parameter:
    """A named, persistent leaf in the graph."""

    def __init__(self, data, name, trainable=True):
        self.tensor = Tensor(np.array(data, dtype=np.float64), requires_grad=trainable)
        self.name = name
        self.trainable = bool(trainable)

    @property
    def data(self):
        return self.tensor.data

    @data.setter
    def data(self, value):
        self.tensor.data = np.asarray(value, dtype=np.float64)

    @property
    def grad(self):
        return self.tensor.grad

    def freeze(self):
        self.trainable = False
        self.tensor.requires_grad = False
        self.tensor.grad = None

    def zero_grad(self):
        self.tensor.grad = None

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.data.shape}, trainable={self.trainable})"


class AdamState:
    __slots__ = ("m", "v", "t")

    def __init__(self, shape):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0


class Adam:
    """Adam over parameter groups, each with its own learning rate."""

    def __init__(self, groups, beta1=0.9, beta2=0.999, eps=1e-8):
        # groups: iterable of (params, lr) pairs.
        self.groups = []
        seen = set()
        for params, lr in groups:
            params = list(params)
            for p in params:
                if id(p) in seen:
                    raise ConfigurationError(f"parameter {p.name} appears in two groups")
                seen.add(id(p))
            self.groups.append((params, float(lr)))
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self._state = {}

    def zero_grad(self):
        for params, _ in self.groups:
            for p in params:
                p.zero_grad()

    def step(self):
        for params, lr in self.groups:
            for p in params:
                if not p.trainable or p.grad is None:
                    continue
                g = p.grad
                if not np.all(np.isfinite(g)):
                    raise TrainingError(f"non-finite gradient for parameter {p.name}")
                st = self._state.get(id(p))
                if st is None:
                    st = self._state[id(p)] = AdamState(p.data.shape)
                st.t += 1
                st.m = self.beta1 * st.m + (1.0 - self.beta1) * g
                st.v = self.beta2 * st.v + (1.0 - self.beta2) * (g * g)
                mhat = st.m / (1.0 - self.beta1**st.t)
                vhat = st.v / (1.0 - self.beta2**st.t)
                p.data = p.data - lr * mhat / (np.sqrt(vhat) + self.eps)
                if not np.all(np.isfinite(p.data)):
                    raise TrainingError(f"non-finite value for parameter {p.name}")
