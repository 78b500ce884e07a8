"""Forward-only dense kernels on float64 ``numpy`` arrays.

Arrays play the role of tensors: 1 to 4 dimensions, row-major, float64.
Every function here is pure and returns a new array.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def as_tensor(x, ndim: int | None = None, name: str = "input") -> np.ndarray:
    """Convert ``x`` to a contiguous float64 array and validate it."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if not 1 <= arr.ndim <= 4:
        raise ValueError(f"{name} must have 1 to 4 dimensions, got {arr.ndim}")
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} has a zero extent: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _sample_grid(n_in: int, n_out: int):
    # corner-aligned: first and last samples land on the first and last input cells
    if n_out == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.floor(pos).astype(np.intp)
    lo = np.minimum(lo, n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def bilinear_resize(x, out_h: int, out_w: int) -> np.ndarray:
    """Resize every channel of a ``(C, H, W)`` map with corner-aligned bilinear sampling."""
    x = as_tensor(x, ndim=3)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size must be positive, got {out_h}x{out_w}")
    _, h, w = x.shape
    if (h, w) == (out_h, out_w):
        return x.copy()
    r0, r1, fr = _sample_grid(h, out_h)
    c0, c1, fc = _sample_grid(w, out_w)
    fr = fr[None, :, None]
    fc = fc[None, None, :]
    top = x[:, r0][:, :, c0] * (1 - fc) + x[:, r0][:, :, c1] * fc
    bottom = x[:, r1][:, :, c0] * (1 - fc) + x[:, r1][:, :, c1] * fc
    out = top * (1 - fr) + bottom * fr
    # keep the convex-combination bound exact under rounding
    lo = x.min(axis=(1, 2), keepdims=True)
    hi = x.max(axis=(1, 2), keepdims=True)
    return np.clip(out, lo, hi)


def conv2d(x, kernel, bias, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Cross-correlate ``(C, H, W)`` input with a ``(K, C, kh, kw)`` kernel."""
    x = as_tensor(x, ndim=3)
    kernel = as_tensor(kernel, ndim=4, name="kernel")
    bias = as_tensor(bias, ndim=1, name="bias")
    k, c, kh, kw = kernel.shape
    if c != x.shape[0]:
        raise ValueError(f"kernel expects {c} input channels, input has {x.shape[0]}")
    if bias.shape[0] != k:
        raise ValueError(f"bias length {bias.shape[0]} does not match {k} output channels")
    if stride < 1 or pad < 0:
        raise ValueError("stride must be >= 1 and pad >= 0")
    if pad:
        x = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    if x.shape[1] < kh or x.shape[2] < kw:
        raise ValueError(f"kernel {kh}x{kw} larger than padded input {x.shape[1:]}")
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # windows: (C, H', W', kh, kw)
    out = np.einsum("chwij,kcij->khw", windows, kernel, optimize=True)
    return out + bias[:, None, None]


def maxpool2d(x, k: int, stride: int) -> np.ndarray:
    x = as_tensor(x, ndim=3)
    if k < 1 or stride < 1:
        raise ValueError("window and stride must be positive")
    if x.shape[1] < k or x.shape[2] < k:
        raise ValueError(f"pool window {k} larger than input {x.shape[1:]}")
    windows = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    return windows.max(axis=(3, 4))


def linear(x, weight, bias) -> np.ndarray:
    x = as_tensor(x, ndim=1)
    weight = as_tensor(weight, ndim=2, name="weight")
    bias = as_tensor(bias, ndim=1, name="bias")
    if weight.shape[1] != x.shape[0] or weight.shape[0] != bias.shape[0]:
        raise ValueError(
            f"extent mismatch: weight {weight.shape}, input {x.shape}, bias {bias.shape}"
        )
    return weight @ x + bias


def softmax(x, axis: int | tuple[int, ...] = -1) -> np.ndarray:
    """Numerically stable softmax. ``axis`` may be a tuple to normalize jointly."""
    x = as_tensor(x)
    axes = axis if isinstance(axis, tuple) else (axis,)
    for a in axes:
        if not -x.ndim <= a < x.ndim:
            raise ValueError(f"axis {a} invalid for shape {x.shape}")
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)
