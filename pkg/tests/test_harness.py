import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lmfilter.filtersvm import FilterModel, predict_filter
from lmfilter.harness import (GridSpec, HyperParams, OvaModel, error_rate, fit, grid_search,
                              predict, predict_ova, run_figure2_experiment, train_binary, train_ova)
from lmfilter.signal import FilterBank, LinearModel
from lmfilter.toy import ToySpec, generate_multiclass_toy, generate_toy
from lmfilter.window import WindowModel


def const_model(c, d=1):
    return WindowModel(np.zeros((1, d)), float(c), 0, 1.0)


class TestErrorRate:
    def test_perfect(self):
        assert error_rate([1, -1, 1], [1, -1, 1]) == 0.0

    def test_one_flip(self):
        assert error_rate([1, -1, 1, 1], [1, -1, 1, -1]) == 0.25

    def test_negated(self):
        t = np.array([1, -1, -1, 1, 1])
        assert error_rate(-t, t) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            error_rate([1, 1], [1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=50), st.data())
def test_error_rate_complement(p, data):
    t = data.draw(st.lists(st.sampled_from([-1, 1]), min_size=len(p), max_size=len(p)))
    p = np.array(p)
    assert error_rate(p, t) + error_rate(-p, t) == pytest.approx(1.0)


class TestOva:
    def test_two_class_agrees_with_binary(self, rng):
        x = rng.normal(size=(200, 2))
        y = np.where(x[:, 0] + 0.3 * rng.normal(size=200) > 0, 2, 1)
        hp = HyperParams(1.0, 1.0, 3, 1)
        ova = train_ova("window", x, y, hp)
        binary = train_binary("window", x, np.where(y == 2, 1, -1), hp)
        s, lab = predict(binary, x)
        pred = predict_ova(ova, x)
        sc = np.column_stack([predict(m, x)[0] for m in ova.models])
        untied = np.abs(sc[:, 0] - sc[:, 1]) > 1e-9
        np.testing.assert_array_equal(pred[untied], np.where(lab == 1, 2, 1)[untied])

    def test_single_class_rejected(self, rng):
        with pytest.raises(ValueError):
            train_ova("plain", rng.normal(size=(10, 1)), np.full(10, 2), HyperParams())

    def test_noiseless_three_class(self):
        x, y = generate_multiclass_toy(3, nbtot=3, sigma=0.0, seed=2)
        for kind in ("plain", "filter"):
            m = train_ova(kind, x, y, HyperParams(10.0, 0.1, 3, 1))
            assert error_rate(predict_ova(m, x), y) == 0.0

    def test_constant_scores(self):
        m = OvaModel("window", (1, 2, 3), (const_model(-10), const_model(10), const_model(-10)))
        np.testing.assert_array_equal(predict_ova(m, np.zeros((5, 1))), 2)

    def test_tie_goes_to_lowest_class(self):
        m = OvaModel("window", (1, 2, 3), (const_model(-1), const_model(4), const_model(4)))
        np.testing.assert_array_equal(predict_ova(m, np.zeros((3, 1))), 2)

    def test_rescaling_keeps_labels(self, rng):
        x = rng.normal(size=(60, 2))
        subs = [FilterModel(FilterBank(rng.normal(size=(3, 2)), 1), LinearModel(rng.normal(size=2), rng.normal()), 1, 1)
                for _ in range(3)]
        scaled = [FilterModel(s.filter.scaled(a), LinearModel(s.model.weights / a, s.model.bias), 1, 1)
                  for s, a in zip(subs, (0.01, 5.0, 300.0))]
        a = predict_ova(OvaModel("filter", (1, 2, 3), tuple(subs)), x)
        b = predict_ova(OvaModel("filter", (1, 2, 3), tuple(scaled)), x)
        np.testing.assert_array_equal(a, b)

    def test_class_failure_names_class(self, rng):
        x = rng.normal(size=(10, 1))
        with pytest.raises(RuntimeError, match="class"):
            train_ova("window", x, np.array([1, 2] * 5), HyperParams(1.0, 1.0, 0, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_argmax_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    biases = rng.normal(size=4)
    m = OvaModel("window", (1, 2, 3, 4), tuple(const_model(b) for b in biases))
    t = OvaModel("window", (1, 2, 3, 4), tuple(const_model(np.exp(b) * 3 + 1) for b in biases))
    np.testing.assert_array_equal(predict_ova(m, np.zeros((2, 1))), predict_ova(t, np.zeros((2, 1))))


@pytest.fixture(scope="module")
def data():
    base = ToySpec(nbtot=3, nbrel=1, sigma=1.5, seed=8, n_samples=400)
    return generate_toy(base), generate_toy(base.with_role("valid", 400))


class TestGrid:
    def test_cells_order(self):
        cells = GridSpec("filter", (1.0, 10.0), (0.1, 1.0), (5,), (2,)).cells()
        assert [(c.C, c.lam) for c in cells] == [(1.0, 0.1), (1.0, 1.0), (10.0, 0.1), (10.0, 1.0)]
        assert len(GridSpec("plain", (1.0, 10.0), (0.1, 1.0)).cells()) == 2

    def test_single_cell(self, data):
        res = grid_search("filter", *data, GridSpec("filter", (0.5,), (2.0,), (5,), (2,)))
        assert res.best == HyperParams(0.5, 2.0, 5, 2)
        assert len(res.table) == 1

    def test_duplicate_cell_same_error(self, data):
        res = grid_search("window", *data, GridSpec("window", (1.0, 1.0), (1.0,), (5, 5), (2,)))
        errs = [e for _, e in res.table]
        assert len(errs) == 1  # duplicates collapse to one cell
        res2 = grid_search("window", *data, GridSpec("window", (1.0,), (1.0,), (5,), (2,)))
        assert res2.table[0][1] == errs[0]

    def test_deterministic_and_exhaustive(self, data):
        grid = GridSpec("avg", (0.01, 0.1, 1.0, 10.0), (1.0,), (9,), (4,))
        a = grid_search("avg", *data, grid)
        b = grid_search("avg", *data, grid)
        assert a.best == b.best
        assert a.table == b.table
        manual = []
        for C in grid.Cs:
            m = fit("avg", *data[0], HyperParams(C, 1.0, 9, 4))
            manual.append(error_rate(predict(m, data[1][0])[1], data[1][1]))
        assert a.best.C == grid.Cs[int(np.argmin(manual))]
        assert [e for _, e in a.table] == manual

    def test_failed_cell_is_infinite(self, data):
        res = grid_search("window", *data, GridSpec("window", (1.0,), (1.0,), (3, 0), (1,)))
        errs = dict((c.f, e) for c, e in res.table)
        assert math.isinf(errs[0])
        assert res.best.f == 3

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            GridSpec("filter", Cs=())
        with pytest.raises(ValueError):
            GridSpec("bogus")


def test_figure2_small_run():
    grids = {k: GridSpec(k, (0.1,), (10.0,)) for k in ("plain", "filter")}
    res = run_figure2_experiment("sigma", seeds=(0, 1), values=(0.3,), kinds=("plain", "filter"), grids=grids)
    rows = res.rows()
    assert [(r["value"], r["method"]) for r in rows] == [(0.3, "plain"), (0.3, "filter")]
    assert all(r["n_seeds"] == 2 for r in rows)
    # low noise: every method is close to error-free
    assert all(r["mean_error"] <= 0.05 for r in rows)
    assert set(res.relevance) == {(0.3, 0), (0.3, 1)}
