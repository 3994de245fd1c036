"""Window-SVM: a linear SVM on flattened ``f x d`` sample windows.

The weight matrix ``W`` acts as filter and classifier at once:

    score_i = sum_{m, j} W[m, j] * X[i + 1 - m + n0, j] + b
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import LinearModel, ShapeError, as_binary_labels, as_signal, vectorize_windows
from .svm import DEFAULT_MAX_ITER, DEFAULT_TOL, decision_values, train_l2svm


def sign_labels(scores: np.ndarray) -> np.ndarray:
    """Map scores to {-1, +1}; a zero score is labelled +1."""
    return np.where(scores >= 0, 1, -1)


@dataclass(frozen=True)
class WindowModel:
    weights: np.ndarray  # (f, d)
    bias: float
    n0: int
    C: float
    converged: bool = True

    @property
    def f(self) -> int:
        return self.weights.shape[0]

    @property
    def n_channels(self) -> int:
        return self.weights.shape[1]

    def linear_model(self) -> LinearModel:
        return LinearModel(self.weights.ravel(), self.bias)


def train_window_svm(x, y, f: int, n0: int, C: float, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> WindowModel:
    x = as_signal(x)
    y = as_binary_labels(y, x.shape[0])
    z = vectorize_windows(x, f, n0)
    sol = train_l2svm(z, y, C, tol=tol, max_iter=max_iter)
    W = np.array(sol.model.weights).reshape(f, x.shape[1])
    return WindowModel(W, sol.model.bias, n0, C, sol.converged)


def predict_window(m: WindowModel, x):
    x = as_signal(x)
    if x.shape[1] != m.n_channels:
        raise ShapeError(f"model expects {m.n_channels} channels, signal has {x.shape[1]}")
    scores = decision_values(m.linear_model(), vectorize_windows(x, m.f, m.n0))
    return scores, sign_labels(scores)
