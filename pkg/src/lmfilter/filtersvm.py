"""Filter-SVM: joint learning of per-channel FIR filters and a linear SVM.

The decision function is

    score_i = sum_j w_j * sum_m F[m, j] * X[i + 1 - m + n0, j] + b

and training minimises, over the filter bank ``F`` only,

    J(F) + 0.5 * lam * ||F||_F^2,   J(F) = min_{w, b} SVM objective on filtered X

by gradient descent with a backtracking line search.  The inner minimum is a
convex squared-hinge SVM re-solved at every evaluation, so ``J`` is
differentiable in ``F`` with gradient

    dJ/dF[m, j] = -C * sum_i y_i * w*_j * X[i + 1 - m + n0, j] * H_i

where ``H_i = max(0, 1 - y_i score_i)`` at the inner optimum ``(w*, b*)``.
Without the ``lam`` term the problem has no minimiser: ``(aF, w/a)`` gives the
same scores with a smaller ``||w||``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .signal import (FilterBank, LinearModel, ShapeError, as_binary_labels, as_signal,
                     filter_apply, filter_windows, window_stack)
from .svm import DEFAULT_MAX_ITER, DEFAULT_TOL, SvmSolution, decision_values, train_l2svm
from .window import WindowModel, sign_labels

log = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
SHRINK = 0.5
INITIAL_STEP = 1.0
MAX_BACKTRACKS = 30


@dataclass(frozen=True)
class StoppingRule:
    """Outer-loop stopping thresholds.

    ``filter_change_tol`` is relative: stop once ``||F_new - F|| <= tol * ||F||``.
    """

    rel_obj_tol: float = 1e-4
    filter_change_tol: float = 1e-5
    max_outer_iter: int = 100

    def __post_init__(self):
        if not (self.rel_obj_tol > 0 and self.filter_change_tol > 0):
            raise ValueError("stopping tolerances must be positive")
        if self.max_outer_iter < 0:
            raise ValueError("max_outer_iter must be >= 0")


@dataclass
class DescentTrace:
    objectives: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    stop_reason: str = ""
    inner_converged: bool = True


@dataclass(frozen=True)
class FilterModel:
    filter: FilterBank
    model: LinearModel
    C: float
    lam: float
    trace: DescentTrace = field(default_factory=DescentTrace, compare=False)

    @property
    def f(self) -> int:
        return self.filter.f

    @property
    def n0(self) -> int:
        return self.filter.n0

    @property
    def n_channels(self) -> int:
        return self.filter.n_channels

    def weighted_map(self) -> np.ndarray:
        """Space-time map ``w_j * F[m, j]``, shape ``(f, d)``."""
        return self.filter.coeffs * self.model.weights[None, :]

    def channel_relevance(self) -> np.ndarray:
        """``|w_j| * ||F[:, j]||`` per channel."""
        return np.abs(self.model.weights) * np.linalg.norm(self.filter.coeffs, axis=0)

    def as_window_model(self) -> WindowModel:
        return WindowModel(self.weighted_map(), self.model.bias, self.n0, self.C)


class FilterProblem:
    """Training data with its window stack precomputed for fixed ``(f, n0)``."""

    def __init__(self, x, y, f: int, n0: int, C: float, lam: float,
                 tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
        x = as_signal(x)
        self.y = as_binary_labels(y, x.shape[0])
        if not (C > 0 and np.isfinite(C)):
            raise ValueError(f"C must be positive, got {C}")
        if not (lam >= 0 and np.isfinite(lam)):
            raise ValueError(f"lambda must be non-negative, got {lam}")
        self.windows = window_stack(x, f, n0)
        self.f, self.n0, self.d = f, n0, x.shape[1]
        self.C, self.lam = C, lam
        self.tol, self.max_iter = tol, max_iter

    def filtered(self, coeffs: np.ndarray) -> np.ndarray:
        return filter_windows(self.windows, coeffs)

    def objective(self, coeffs: np.ndarray, init: LinearModel | None = None):
        sol = train_l2svm(self.filtered(coeffs), self.y, self.C, tol=self.tol,
                          max_iter=self.max_iter, init=init)
        return sol.objective + 0.5 * self.lam * float(np.sum(coeffs * coeffs)), sol

    def gradient(self, coeffs: np.ndarray, inner: SvmSolution) -> np.ndarray:
        w = inner.model.weights
        scores = self.filtered(coeffs) @ w + inner.model.bias
        h = np.maximum(0.0, 1.0 - self.y * scores)
        g = -self.C * np.einsum("n,nmj->mj", self.y * h, self.windows) * w[None, :]
        return g + self.lam * coeffs

    def line_search(self, coeffs, direction, value, inner, step0=INITIAL_STEP, grad=None):
        """Backtracking Armijo search along ``-direction``.

        Returns ``(coeffs, value, inner, step)``; ``step == 0`` means no
        acceptable point was found and the inputs are returned unchanged.
        """
        if grad is None:
            grad = self.gradient(coeffs, inner)
        slope = float(np.sum(grad * direction))
        if not slope > 0:
            return coeffs, value, inner, 0.0
        step = step0
        for _ in range(MAX_BACKTRACKS + 1):
            cand = coeffs - step * direction
            v, sol = self.objective(cand, init=inner.model)
            if v <= value - ARMIJO_C1 * step * slope:
                return cand, v, sol, step
            step *= SHRINK
        return coeffs, value, inner, 0.0


def _problem_for(F: FilterBank, x, y, C, lam, tol=DEFAULT_TOL) -> FilterProblem:
    x = as_signal(x)
    if F.n_channels != x.shape[1]:
        raise ShapeError(f"filter bank has {F.n_channels} channels, signal has {x.shape[1]}")
    return FilterProblem(x, y, F.f, F.n0, C, lam, tol=tol)


def objective_J(F: FilterBank, x, y, C: float, lam: float, tol: float = DEFAULT_TOL):
    """Outer objective value at ``F`` and the inner SVM solution."""
    return _problem_for(F, x, y, C, lam, tol).objective(np.asarray(F.coeffs))


def gradient_F(F: FilterBank, inner: SvmSolution, x, y, C: float, lam: float) -> np.ndarray:
    """Gradient of the outer objective at ``F`` given the inner optimum there."""
    return _problem_for(F, x, y, C, lam).gradient(np.asarray(F.coeffs), inner)


def line_search(F: FilterBank, D, x, y, C: float, lam: float, step0: float = INITIAL_STEP):
    """Move ``F`` along ``-D``; returns ``(F_new, inner, step)``."""
    prob = _problem_for(F, x, y, C, lam)
    c = np.asarray(F.coeffs)
    value, inner = prob.objective(c)
    c_new, _, inner, step = prob.line_search(c, np.asarray(D, dtype=float), value, inner, step0)
    return FilterBank(c_new, F.n0), inner, step


def _descend(prob: FilterProblem, coeffs: np.ndarray, stop: StoppingRule):
    value, inner = prob.objective(coeffs)
    trace = DescentTrace(objectives=[value], inner_converged=inner.converged)
    step0 = INITIAL_STEP
    if stop.max_outer_iter == 0:
        trace.stop_reason = "max_outer_iter"
    for it in range(stop.max_outer_iter):
        grad = prob.gradient(coeffs, inner)
        if not np.any(grad):
            trace.stop_reason = "zero_gradient"
            break
        new, new_value, new_inner, step = prob.line_search(coeffs, grad, value, inner, step0, grad=grad)
        if step == 0.0:
            trace.stop_reason = "line_search_failed"
            break
        change = float(np.linalg.norm(new - coeffs))
        rel = abs(value - new_value) / max(abs(value), np.finfo(float).tiny)
        coeffs, value, inner = new, new_value, new_inner
        trace.objectives.append(value)
        trace.steps.append(step)
        trace.inner_converged &= inner.converged
        # previous accepted step, doubled, seeds the next search
        step0 = 2.0 * step
        if rel <= stop.rel_obj_tol:
            trace.stop_reason = "rel_obj_tol"
            break
        if change <= stop.filter_change_tol * np.linalg.norm(coeffs):
            trace.stop_reason = "filter_change_tol"
            break
    else:
        if stop.max_outer_iter:
            trace.stop_reason = "max_outer_iter"
    if not trace.inner_converged:
        log.warning("inner SVM did not converge during Filter-SVM training")
    return coeffs, inner, trace


def train_filter_svm(x, y, f: int, n0: int, C: float, lam: float,
                     stop: StoppingRule | None = None, init: np.ndarray | None = None,
                     tol: float = DEFAULT_TOL) -> FilterModel:
    """Gradient descent on ``F`` from the uniform ``1/f`` initialisation (or ``init``)."""
    stop = stop or StoppingRule()
    prob = FilterProblem(x, y, f, n0, C, lam, tol=tol)
    coeffs = np.full((f, prob.d), 1.0 / f) if init is None else np.array(init, dtype=float)
    if coeffs.shape != (f, prob.d):
        raise ShapeError(f"initial filter must be {(f, prob.d)}, got {coeffs.shape}")
    coeffs, inner, trace = _descend(prob, coeffs, stop)
    return FilterModel(FilterBank(coeffs, n0), inner.model, C, lam, trace)


def train_filter_svm_restarts(x, y, f: int, n0: int, C: float, lam: float, seeds,
                              stop: StoppingRule | None = None) -> FilterModel:
    """Best-of-several runs: the uniform start plus one perturbed start per seed."""
    x = as_signal(x)
    best = train_filter_svm(x, y, f, n0, C, lam, stop)
    for seed in seeds:
        rng = np.random.default_rng(seed)
        init = (1.0 + 0.5 * rng.standard_normal((f, x.shape[1]))) / f
        cand = train_filter_svm(x, y, f, n0, C, lam, stop, init=init)
        if cand.trace.objectives[-1] < best.trace.objectives[-1]:
            best = cand
    return best


def train_avg_svm(x, y, f: int, n0: int, C: float, lam: float = 0.0) -> FilterModel:
    """Average-filter baseline: Filter-SVM with ``F`` frozen at ``1/f``."""
    return train_filter_svm(x, y, f, n0, C, lam, StoppingRule(max_outer_iter=0))


def predict_filter(m: FilterModel, x):
    x = as_signal(x)
    if x.shape[1] != m.n_channels:
        raise ShapeError(f"model expects {m.n_channels} channels, signal has {x.shape[1]}")
    scores = decision_values(m.model, filter_apply(x, m.filter))
    return scores, sign_labels(scores)
