"""Convolution ops for the visual encoder (and nothing else).

3x3 same-padding convolution via im2col and 2x2 max pooling, written as graph
ops compatible with the autodiff core. Kernels larger than 1x1 live here only;
downstream reward-map modules never need them.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigurationError
from ..diffcore.tensor import Tensor, _make


def _im2col(xp, kh, kw):
    # xp: padded (B, Hp, Wp, C) -> (B, H, W, kh, kw, C) windows.
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))


def conv2d(x, w, b):
    """Same-padding stride-1 convolution. x: (B,H,W,Cin); w: (kh,kw,Cin,Cout); b: (Cout,)."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ConfigurationError("conv2d expects (B,H,W,C) input and (kh,kw,Cin,Cout) kernel")
    if x.data.shape[3] != w.data.shape[2]:
        raise ConfigurationError(
            f"conv2d channel mismatch: input {x.data.shape} vs kernel {w.data.shape}"
        )
    B, H, W, Cin = x.data.shape
    kh, kw, _, Cout = w.data.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x.data, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    cols = _im2col(xp, kh, kw).reshape(B * H * W, kh * kw * Cin)
    wmat = w.data.reshape(kh * kw * Cin, Cout)
    out_data = (cols @ wmat + b.data).reshape(B, H, W, Cout)

    def backward(g):
        gmat = g.reshape(B * H * W, Cout)
        if w.requires_grad:
            w._accumulate((cols.T @ gmat).reshape(w.data.shape))
        if b.requires_grad:
            b._accumulate(gmat.sum(axis=0))
        if x.requires_grad:
            dcols = (gmat @ wmat.T).reshape(B, H, W, kh, kw, Cin)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, i : i + H, j : j + W, :] += dcols[:, :, :, i, j, :]
            x._accumulate(dxp[:, ph : ph + H, pw : pw + W, :])

    return _make(out_data, (x, w, b), backward)


def maxpool2(x):
    """2x2 max pooling, stride 2. Ties resolve to the first (row-major) maximum."""
    B, H, W, C = x.data.shape
    if H % 2 or W % 2:
        raise ConfigurationError(f"maxpool2 needs even spatial dims, got {H}x{W}")
    h, w = H // 2, W // 2
    xr = x.data.reshape(B, h, 2, w, 2, C).transpose(0, 1, 3, 2, 4, 5).reshape(B, h, w, 4, C)
    idx = xr.argmax(axis=3)
    out_data = np.take_along_axis(xr, idx[:, :, :, None, :], axis=3).squeeze(3)

    def backward(g):
        if x.requires_grad:
            dxr = np.zeros((B, h, w, 4, C))
            np.put_along_axis(dxr, idx[:, :, :, None, :], g[:, :, :, None, :], axis=3)
            dx = (
                dxr.reshape(B, h, w, 2, 2, C)
                .transpose(0, 1, 3, 2, 4, 5)
                .reshape(B, H, W, C)
            )
            x._accumulate(dx)

    return _make(out_data, (x,), backward)


def flatten(x):
    """(B, ...) -> (B, prod(...))."""
    B = x.data.shape[0]

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.reshape(x.data.shape))

    return _make(x.data.reshape(B, -1), (x,), backward)


__all__ = ["conv2d", "maxpool2", "flatten", "Tensor"]
