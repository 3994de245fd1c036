"""Primal linear SVM with squared hinge loss.

Minimises

    0.5 * ||w||^2 + 0.5 * C * sum_i max(0, 1 - y_i (z_i . w + b))^2

by Newton's method on the (once differentiable, piecewise quadratic)
objective.  The bias ``b`` is not regularised.  Each iteration recomputes the
set of margin violators, takes a Newton step on the quadratic restricted to
that set and follows it with an exact line search along the step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .signal import LinearModel, ShapeError, as_binary_labels

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


@dataclass
class SvmSolution:
    model: LinearModel
    objective: float
    n_iterations: int
    converged: bool
    single_class: bool = False
    trace: list = field(default_factory=list)


def _as_design(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2:
        raise ShapeError("design matrix must be 2-D")
    if not np.all(np.isfinite(z)):
        raise ValueError("design matrix contains non-finite values")
    return z


def decision_values(model: LinearModel, z) -> np.ndarray:
    """Scores ``z @ w + b`` for every row of ``z``."""
    z = _as_design(z)
    if z.shape[1] != model.weights.shape[0]:
        raise ShapeError(f"design has {z.shape[1]} columns, model has {model.weights.shape[0]} weights")
    return z @ model.weights + model.bias


def squared_hinge_objective(z, y, C: float, model: LinearModel) -> float:
    scores = decision_values(model, z)
    y = as_binary_labels(y, scores.shape[0])
    h = np.maximum(0.0, 1.0 - y * scores)
    return 0.5 * float(model.weights @ model.weights) + 0.5 * C * float(h @ h)


def _objective(beta, out, y, C):
    w = beta[:-1]
    h = np.maximum(0.0, 1.0 - y * out)
    return 0.5 * float(w @ w) + 0.5 * C * float(h @ h)


def _line_search(beta, d, out, delta, y, C):
    """Exact minimiser of the 1-D convex piecewise quadratic along ``d``."""
    wd = float(beta[:-1] @ d[:-1])
    dd = float(d[:-1] @ d[:-1])

    def derivs(t):
        h = 1.0 - y * (out + t * delta)
        act = h > 0
        g = wd + t * dd - C * float(np.sum(y[act] * delta[act] * h[act]))
        hh = dd + C * float(delta[act] @ delta[act])
        return g, hh

    g0, _ = derivs(0.0)
    if g0 >= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    g, hh = derivs(hi)
    while g < 0:
        if hi > 1e12:
            return hi
        lo, hi = hi, 2.0 * hi
        g, hh = derivs(hi)
    t = hi
    for _ in range(100):
        if g == 0.0 or hi - lo <= 1e-15 * hi:
            break
        t_new = t - g / hh if hh > 0 else 0.5 * (lo + hi)
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        t = t_new
        g, hh = derivs(t)
        if g < 0:
            lo = t
        elif g > 0:
            hi = t
        else:
            break
        # exact on the current piece: step landed where the active set is stable
        if abs(g) <= 1e-14 * max(1.0, abs(g0)):
            break
    return t


def train_l2svm(z, y, C: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                init: LinearModel | None = None) -> SvmSolution:
    """Solve the squared-hinge linear SVM in the primal.

    Stops when ``||grad|| <= tol * max(1, ||grad at start||)``.  ``init``
    warm-starts the solver; the result does not depend on it beyond ``tol``.
    """
    z = _as_design(z)
    n, p = z.shape
    y = as_binary_labels(y, n)
    if not (C > 0 and np.isfinite(C)):
        raise ValueError(f"C must be positive and finite, got {C}")
    single_class = bool(np.all(y == y[0]))
    if single_class:
        log.debug("single-class input to train_l2svm (n=%d)", n)

    za = np.hstack([z, np.ones((n, 1))])
    reg = np.ones(p + 1)
    reg[-1] = 0.0
    beta = np.zeros(p + 1)
    if init is not None:
        if init.weights.shape[0] != p:
            raise ShapeError("warm start has the wrong number of weights")
        beta[:-1] = init.weights
        beta[-1] = init.bias

    out = za @ beta
    obj = _objective(beta, out, y, C)
    trace = [obj]
    g0 = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        h = 1.0 - y * out
        act = h > 0
        grad = reg * beta - C * (za[act].T @ (y[act] * h[act]))
        gnorm = float(np.linalg.norm(grad))
        if g0 is None:
            g0 = gnorm
        if gnorm <= tol * max(1.0, g0):
            converged = True
            it -= 1
            break
        zs = za[act]
        hess = np.diag(reg) + C * (zs.T @ zs)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        delta = za @ step
        t = _line_search(beta, step, out, delta, y, C)
        new_beta = beta + t * step
        new_out = za @ new_beta
        new_obj = _objective(new_beta, new_out, y, C)
        if not new_obj <= obj:
            # round-off floor: no representable decrease left along the Newton step
            converged = gnorm <= 1e-6 * max(1.0, g0)
            break
        stalled = obj - new_obj <= 1e-16 * max(1.0, abs(obj)) and np.array_equal(act, (1.0 - y * new_out) > 0)
        beta, out, obj = new_beta, new_out, new_obj
        trace.append(obj)
        if stalled:
            converged = True
            break
    else:
        log.warning("train_l2svm did not converge in %d iterations", max_iter)

    model = LinearModel(beta[:-1].copy(), float(beta[-1]))
    return SvmSolution(model, obj, it, converged, single_class, trace)
