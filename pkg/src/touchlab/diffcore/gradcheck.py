"""Central finite-difference gradient checking.

Used by the test suite as the independent oracle for every differentiable op:
perturb each input element by +-h, compare the numeric slope against the
gradient produced by backward().
"""

import numpy as np

from .tensor import Tensor


def numeric_gradient(f, x: Tensor, h=1e-5):
    """d f / d x by central differences; f() re-runs the forward pass."""
    g = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = float(f())
        flat[i] = orig - h
        lo = float(f())
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return g


def check_gradients(f, inputs, h=1e-5, rtol=1e-4, atol=1e-8):
    """Compare analytic and numeric gradients for a scalar-valued f(*inputs).

    Returns the worst relative error observed. Relative error uses
    |a - n| / max(|a|, |n|) when either side is appreciable, and falls back
    to an absolute tolerance when both are near zero.
    """
    for x in inputs:
        x.grad = None
        x.requires_grad = True
    out = f()
    out.backward()
    analytic = [np.array(x.grad if x.grad is not None else np.zeros_like(x.data)) for x in inputs]
    worst = 0.0
    for x, a in zip(inputs, analytic):
        n = numeric_gradient(lambda: f().data, x, h=h)
        denom = np.maximum(np.abs(a), np.abs(n))
        small = denom < 1e-6
        err = np.where(small, np.abs(a - n) / 1.0, np.abs(a - n) / np.where(small, 1.0, denom))
        bad = (err > rtol) & ~(small & (np.abs(a - n) <= atol))
        if np.any(bad):
            idx = np.unravel_index(np.argmax(err), err.shape)
            raise AssertionError(
                f"gradient mismatch at {idx}: analytic={a[idx]:.8g} numeric={n[idx]:.8g} "
                f"rel={err[idx]:.3g}"
            )
        worst = max(worst, float(err.max()) if err.size else 0.0)
    return worst
