"""Signal matrices, FIR filter banks and sliding-window primitives.

Conventions
-----------
A signal is an ``(N, d)`` float array: rows are time samples, columns are
channels.  Documentation indexes samples and taps from 1, as in

    Xf[i, j] = sum_{m=1..f} F[m, j] * X[i + 1 - m + n0, j]

In 0-based numpy indexing (``i' = i - 1``, ``m' = m - 1``) this reads
``Xf[i', j] = sum_{m'} F[m', j] * X[i' - m' + n0, j]``.  Sample indices that
fall outside ``[0, N)`` contribute zero (zero padding).  ``n0 = 0`` gives a
causal filter, ``n0 = f // 2`` one centred on the current sample.

Windows are flattened tap-major: entry ``(m, j)`` of a window goes to column
``m * d + j`` (0-based), which is exactly ``W.ravel()`` for a C-ordered
``(f, d)`` weight matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when array dimensions do not agree."""


def as_signal(x, name: str = "x") -> np.ndarray:
    """Validate and return a float64 ``(N, d)`` signal matrix.

    1-D input is treated as a single channel.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D (samples x channels), got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one sample and one channel, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def as_binary_labels(y, n: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError("labels must be a 1-D vector")
    if n is not None and y.shape[0] != n:
        raise ShapeError(f"label length {y.shape[0]} does not match {n} samples")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("binary labels must be in {-1, +1}")
    return y.astype(float)


@dataclass(frozen=True)
class FilterBank:
    """Per-channel FIR taps ``coeffs`` (``f x d``) and delay ``n0``."""

    coeffs: np.ndarray
    n0: int = 0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ShapeError(f"filter coefficients must be f x d with f, d >= 1, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("filter coefficients contain non-finite values")
        n0 = int(self.n0)
        if not 0 <= n0 <= c.shape[0]:
            raise ValueError(f"delay n0={n0} must lie in [0, f={c.shape[0]}]")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "n0", n0)

    @property
    def f(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_channels(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def uniform(cls, f: int, d: int, n0: int = 0) -> "FilterBank":
        """Moving-average bank, every tap equal to ``1/f``."""
        return cls(np.full((f, d), 1.0 / f), n0)

    def scaled(self, alpha: float) -> "FilterBank":
        return FilterBank(alpha * self.coeffs, self.n0)


@dataclass(frozen=True)
class LinearModel:
    """Linear decision function ``z @ weights + bias``."""

    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).ravel()
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("linear model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))


def _check_window_args(f: int, n0: int):
    if int(f) != f or f < 1:
        raise ValueError(f"window length f must be a positive integer, got {f}")
    if int(n0) != n0 or not 0 <= n0 <= f:
        raise ValueError(f"delay n0 must be an integer in [0, f], got {n0}")


def shift(x: np.ndarray, s: int) -> np.ndarray:
    """Return ``out`` with ``out[i] = x[i + s]``, zero outside the range."""
    n = x.shape[0]
    out = np.zeros_like(x)
    if s >= 0:
        if s < n:
            out[: n - s] = x[s:]
    elif -s < n:
        out[-s:] = x[: n + s]
    return out


def window_stack(x, f: int, n0: int) -> np.ndarray:
    """All sample windows as an ``(N, f, d)`` array.

    ``out[i, m, j] = X[i - m + n0, j]`` (0-based), zero where out of range.
    """
    x = as_signal(x)
    _check_window_args(f, n0)
    n, d = x.shape
    out = np.zeros((n, f, d))
    for m in range(f):
        out[:, m, :] = shift(x, n0 - m)
    return out


def window_at(x, i: int, f: int, n0: int) -> np.ndarray:
    """The ``f x d`` window entering the decision at 1-based sample ``i``."""
    x = as_signal(x)
    _check_window_args(f, n0)
    n, d = x.shape
    if not 1 <= i <= n:
        raise IndexError(f"sample index {i} outside [1, {n}]")
    out = np.zeros((f, d))
    for m in range(f):
        k = i - 1 - m + n0
        if 0 <= k < n:
            out[m] = x[k]
    return out


def vectorize_windows(x, f: int, n0: int) -> np.ndarray:
    """Design matrix ``(N, f*d)`` whose rows are tap-major flattened windows."""
    w = window_stack(x, f, n0)
    return w.reshape(w.shape[0], -1)


def filter_apply(x, fb: FilterBank) -> np.ndarray:
    """Filter every channel with its own FIR column; returns a new ``(N, d)`` array."""
    x = as_signal(x)
    if fb.n_channels != x.shape[1]:
        raise ShapeError(f"filter bank has {fb.n_channels} channels, signal has {x.shape[1]}")
    out = np.zeros_like(x)
    for m in range(fb.f):
        out += fb.coeffs[m] * shift(x, fb.n0 - m)
    return out


def filter_windows(windows: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Filter a precomputed ``window_stack``; same result as :func:`filter_apply`."""
    return np.einsum("nmj,mj->nj", windows, coeffs)
