"""Multiclass wrapping, grid-search validation and the toy experiments."""
from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from joblib import Parallel, delayed

from .filtersvm import (FilterModel, StoppingRule, predict_filter, train_avg_svm,
                        train_filter_svm, train_filter_svm_restarts)
from .signal import ShapeError, as_signal
from .toy import DEFAULT_SEEDS, generate_toy, sweep_points
from .window import WindowModel, predict_window, sign_labels, train_window_svm

log = logging.getLogger(__name__)

KINDS = ("plain", "avg", "window", "filter")
METHOD_NAMES = {"plain": "SVM", "avg": "Avg-SVM", "window": "Window-SVM", "filter": "Filter-SVM"}

DEFAULT_CS = tuple(10.0 ** k for k in range(-2, 4))
DEFAULT_LAMBDAS = tuple(10.0 ** k for k in range(-2, 3))
TOY_F, TOY_N0 = 21, 11


def default_jobs() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class HyperParams:
    C: float = 1.0
    lam: float = 1.0
    f: int = TOY_F
    n0: int = TOY_N0

    def for_kind(self, kind: str) -> "HyperParams":
        """Drop the parameters a trainer ignores so equal cells compare equal."""
        if kind == "plain":
            return replace(self, f=1, n0=0, lam=0.0)
        if kind in ("avg", "window"):
            return replace(self, lam=0.0)
        return self


@dataclass(frozen=True)
class OvaModel:
    kind: str
    classes: tuple
    models: tuple


def check_kind(kind: str):
    if kind not in KINDS:
        raise ValueError(f"unknown trainer kind {kind!r}; expected one of {KINDS}")


def train_binary(kind: str, x, y, hp: HyperParams, stop: StoppingRule | None = None,
                 restart_seeds=()):
    check_kind(kind)
    hp = hp.for_kind(kind)
    if kind == "plain":
        return train_avg_svm(x, y, 1, 0, hp.C)
    if kind == "avg":
        return train_avg_svm(x, y, hp.f, hp.n0, hp.C)
    if kind == "window":
        return train_window_svm(x, y, hp.f, hp.n0, hp.C)
    if restart_seeds:
        return train_filter_svm_restarts(x, y, hp.f, hp.n0, hp.C, hp.lam, restart_seeds, stop)
    return train_filter_svm(x, y, hp.f, hp.n0, hp.C, hp.lam, stop)


def binary_scores(model, x) -> np.ndarray:
    if isinstance(model, FilterModel):
        return predict_filter(model, x)[0]
    if isinstance(model, WindowModel):
        return predict_window(model, x)[0]
    raise TypeError(f"not a binary model: {type(model).__name__}")


def is_binary_labels(y) -> bool:
    return bool(np.all(np.isin(np.asarray(y), (-1, 1))))


def train_ova(kind: str, x, y, hp: HyperParams, jobs: int = 1, **kw) -> OvaModel:
    """One binary model per class, class ``k`` against the rest."""
    x = as_signal(x)
    y = np.asarray(y)
    classes = tuple(int(c) for c in np.unique(y))
    if len(classes) < 2:
        raise ValueError("one-against-all training needs at least two classes")

    def one(k):
        try:
            return train_binary(kind, x, np.where(y == k, 1, -1), hp, **kw)
        except Exception as e:
            raise RuntimeError(f"training class {k} against all failed: {e}") from e

    models = Parallel(n_jobs=jobs)(delayed(one)(k) for k in classes)
    return OvaModel(kind, classes, tuple(models))


def ova_scores(m: OvaModel, x) -> np.ndarray:
    """``(N, K)`` matrix of per-class scores."""
    return np.column_stack([binary_scores(sub, x) for sub in m.models])


def predict_ova(m: OvaModel, x) -> np.ndarray:
    """Highest-scoring class per sample; ties go to the lowest class index."""
    s = ova_scores(m, x)
    return np.asarray(m.classes)[np.argmax(s, axis=1)]


def fit(kind: str, x, y, hp: HyperParams, jobs: int = 1, **kw):
    """Binary model for ``{-1, +1}`` labels, one-against-all otherwise."""
    if is_binary_labels(y):
        return train_binary(kind, x, y, hp, **kw)
    return train_ova(kind, x, y, hp, jobs=jobs, **kw)


def predict(model, x):
    """``(scores, labels)``; scores are ``(N,)`` for binary, ``(N, K)`` for OVA."""
    if isinstance(model, OvaModel):
        s = ova_scores(model, x)
        return s, np.asarray(model.classes)[np.argmax(s, axis=1)]
    s = binary_scores(model, x)
    return s, sign_labels(s)


def error_rate(pred, truth) -> float:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction length {pred.shape} differs from truth {truth.shape}")
    if pred.size == 0:
        raise ValueError("empty label sequences")
    return float(np.mean(pred != truth))


@dataclass(frozen=True)
class GridSpec:
    kind: str
    Cs: tuple = DEFAULT_CS
    lams: tuple = DEFAULT_LAMBDAS
    fs: tuple = (TOY_F,)
    n0s: tuple = (TOY_N0,)

    def __post_init__(self):
        check_kind(self.kind)
        if not (self.Cs and self.lams and self.fs and self.n0s):
            raise ValueError("grid candidate lists must be non-empty")
        if min(self.Cs) <= 0 or min(self.lams) <= 0:
            raise ValueError("grid values of C and lambda must be positive")

    def cells(self) -> list:
        """Cells in search order: f, n0, then C outer and lambda inner, as given.

        Parameters the trainer ignores are collapsed, so e.g. a plain-SVM grid
        only varies C.
        """
        out = []
        for f, n0, C, lam in product(self.fs, self.n0s, self.Cs, self.lams):
            hp = HyperParams(float(C), float(lam), int(f), int(n0)).for_kind(self.kind)
            if hp not in out:
                out.append(hp)
        return out


@dataclass
class GridResult:
    best: HyperParams
    table: list  # [(HyperParams, validation error)]
    model: object = None


def _grid_cell(kind, train, valid, hp):
    try:
        m = fit(kind, train[0], train[1], hp)
        return error_rate(predict(m, valid[0])[1], valid[1]), m
    except Exception as e:
        log.warning("grid cell %s failed: %s", hp, e)
        return math.inf, None


def grid_search(kind: str, train, valid, grid: GridSpec, jobs: int = 1) -> GridResult:
    """Train every grid cell on ``train``; pick the lowest validation error (first wins ties)."""
    if grid.kind != kind:
        grid = replace(grid, kind=kind)
    cells = grid.cells()
    results = Parallel(n_jobs=jobs)(delayed(_grid_cell)(kind, train, valid, hp) for hp in cells)
    errors = [r[0] for r in results]
    i = int(np.argmin(errors))
    return GridResult(cells[i], list(zip(cells, errors)), results[i][1])


@dataclass
class ExperimentResult:
    sweep: str
    errors: dict = field(default_factory=dict)  # (value, method) -> [test error per seed]
    chosen: dict = field(default_factory=dict)  # (value, method, seed) -> HyperParams
    validation: dict = field(default_factory=dict)  # (value, method, seed) -> table
    wall_times: dict = field(default_factory=dict)  # (value, method, seed) -> seconds
    relevance: dict = field(default_factory=dict)  # (value, seed) -> Filter-SVM channel relevance

    def mean_error(self, value, method) -> float:
        return float(np.mean(self.errors[(value, method)]))

    def rows(self) -> list:
        """One row per sweep value and method, in sweep then method order."""
        out = []
        for (value, method), errs in sorted(self.errors.items(), key=lambda kv: (kv[0][0], KINDS.index(kv[0][1]))):
            e = np.asarray(errs, dtype=float)
            out.append({"sweep": self.sweep, "value": value, "method": method,
                        "mean_error": float(np.mean(e)), "std_error": float(np.std(e)),
                        "n_seeds": int(e.size)})
        return out


def _run_point(point, kind, grid):
    t0 = time.perf_counter()
    train, valid, test = (generate_toy(s) for s in (point.train, point.valid, point.test))
    res = grid_search(kind, train, valid, grid)
    if res.model is None:
        err = math.nan
    else:
        err = error_rate(predict(res.model, test[0])[1], test[1])
    rel = res.model.channel_relevance() if isinstance(res.model, FilterModel) else None
    return err, res, rel, time.perf_counter() - t0


def run_figure2_experiment(side: str, seeds=DEFAULT_SEEDS, values=None, kinds=KINDS,
                           grids: dict | None = None, jobs: int = 1) -> ExperimentResult:
    """Grid-search each method per sweep point and seed, score it on the test draw.

    ``side`` is ``"sigma"`` (nbtot=30, nbrel=3) or ``"nbtot"`` (sigma=3, nbrel=3).
    """
    grids = grids or {}
    points = sweep_points(side, seeds, values)
    work = [(p, k, grids.get(k, GridSpec(k))) for p in points for k in kinds]
    out = Parallel(n_jobs=jobs)(delayed(_run_point)(p, k, g) for p, k, g in work)
    result = ExperimentResult(side)
    for (p, k, _), (err, res, rel, wall) in zip(work, out):
        result.errors.setdefault((p.value, k), []).append(err)
        result.chosen[(p.value, k, p.seed)] = res.best
        result.validation[(p.value, k, p.seed)] = res.table
        result.wall_times[(p.value, k, p.seed)] = wall
        if rel is not None:
            result.relevance[(p.value, p.seed)] = rel
    return result


def run_toy_figure1(seeds=DEFAULT_SEEDS, sigma: float = 1.0, jobs: int = 1, bins: int = 40,
                    Cs=DEFAULT_CS, lams=DEFAULT_LAMBDAS):
    """Single-channel toy: unfiltered vs learned-filter test error, plus histograms.

    Returns ``(errors, histogram_rows)`` where ``errors`` maps method kind to
    per-seed test errors and the histogram compares class-conditional sample
    values before and after filtering (first seed).
    """
    from .toy import TEST_SAMPLES, VALID_SAMPLES, ToySpec

    def one(seed):
        base = ToySpec(nbtot=1, nbrel=1, sigma=sigma, seed=seed)
        train = generate_toy(base)
        valid = generate_toy(base.with_role("valid", VALID_SAMPLES))
        test = generate_toy(base.with_role("test", TEST_SAMPLES))
        out = {}
        for kind in ("plain", "filter"):
            res = grid_search(kind, train, valid, GridSpec(kind, tuple(Cs), tuple(lams)))
            out[kind] = (error_rate(predict(res.model, test[0])[1], test[1]), res.model)
        return out, test

    runs = Parallel(n_jobs=jobs)(delayed(one)(s) for s in seeds)
    errors = {k: [r[0][k][0] for r in runs] for k in ("plain", "filter")}

    (first, (xt, yt)) = runs[0]
    fm = first["filter"][1]
    raw = xt[:, 0]
    filt = (predict_filter(fm, xt)[0] - fm.model.bias) / max(abs(fm.model.weights[0]), 1e-300)
    lo, hi = min(raw.min(), filt.min()), max(raw.max(), filt.max())
    edges = np.linspace(lo, hi, bins + 1)
    hist = []
    counts = {(name, lab): np.histogram(v[yt == lab], edges)[0]
              for name, v in (("raw", raw), ("filtered", filt)) for lab in (-1, 1)}
    for b in range(bins):
        hist.append({"bin_center": float(0.5 * (edges[b] + edges[b + 1])),
                     "raw_neg": int(counts[("raw", -1)][b]), "raw_pos": int(counts[("raw", 1)][b]),
                     "filtered_neg": int(counts[("filtered", -1)][b]),
                     "filtered_pos": int(counts[("filtered", 1)][b])})
    return errors, hist


# Filter sizes and delays evaluated on the BCI Competition III data (96 PSD
# feature channels, 3 classes).  Reference average test errors are the
# published ones; they are not reproducible without the external data.
BCI_CONFIGS = (
    ("plain", 1, 0, 0.4123),
    ("filter", 8, 0, 0.3621),
    ("filter", 20, 0, 0.3032),
    ("filter", 50, 0, 0.2699),
    ("avg", 100, 50, 0.2550),
    ("filter", 100, 50, 0.2018),
)


def run_bci_table1(train, valid, test, configs=BCI_CONFIGS, Cs=DEFAULT_CS, lams=DEFAULT_LAMBDAS,
                   jobs: int = 1) -> list:
    """Grid-search each configuration on ``valid`` and report its test error."""
    rows = []
    for kind, f, n0, ref in configs:
        grid = GridSpec(kind, tuple(Cs), tuple(lams), (f,), (n0,))
        t0 = time.perf_counter()
        res = grid_search(kind, train, valid, grid, jobs=jobs)
        err = math.nan if res.model is None else error_rate(predict(res.model, test[0])[1], test[1])
        rows.append({"method": METHOD_NAMES[kind], "f": f, "n0": n0, "C": res.best.C,
                     "lambda": res.best.lam, "valid_error": min(e for _, e in res.table),
                     "test_error": err, "published_avg_error": ref,
                     "seconds": time.perf_counter() - t0})
    return rows
