import time

import numpy as np
import pytest

from lmfilter.signal import FilterBank, LinearModel, ShapeError, vectorize_windows
from lmfilter.svm import decision_values, train_l2svm
from lmfilter.toy import ToySpec, generate_toy
from lmfilter.window import WindowModel, predict_window, sign_labels, train_window_svm
from lmfilter.filtersvm import FilterModel, predict_filter


def test_sign_zero_is_positive():
    np.testing.assert_array_equal(sign_labels(np.array([-1e-300, 0.0, 2.0])), [-1, 1, 1])


def test_single_tap_equals_plain_svm(rng):
    x = rng.normal(size=(120, 3))
    y = np.where(x[:, 0] - x[:, 2] + 0.3 * rng.normal(size=120) > 0, 1, -1)
    wm = train_window_svm(x, y, 1, 0, 2.0)
    sol = train_l2svm(x, y, 2.0)
    np.testing.assert_allclose(wm.weights.ravel(), sol.model.weights, atol=1e-10)
    assert wm.bias == pytest.approx(sol.model.bias, abs=1e-10)


def test_noise_channel_gets_small_weights():
    x, y = generate_toy(ToySpec(nbtot=2, nbrel=1, sigma=1.0, n_samples=3000, seed=3))
    wm = train_window_svm(x, y, 11, 5, 0.1)
    norms = np.linalg.norm(wm.weights, axis=0)
    assert norms[1] < 0.25 * norms[0]


def test_window_absorbs_lag():
    spec = ToySpec(nbtot=1, nbrel=1, sigma=0.8, lags=(6,), n_samples=1500, seed=4)
    x, y = generate_toy(spec)
    err = {}
    for f, n0 in [(1, 0), (9, 8)]:
        m = train_window_svm(x, y, f, n0, 1.0)
        err[f] = np.mean(predict_window(m, x)[1] != y)
    assert err[9] < err[1]


def test_constant_model():
    m = WindowModel(np.zeros((3, 2)), 1.0, 1, 1.0)
    s, lab = predict_window(m, np.random.default_rng(0).normal(size=(10, 2)))
    np.testing.assert_array_equal(s, 1.0)
    np.testing.assert_array_equal(lab, 1)


def test_scores_match_decision_values(rng):
    x = rng.normal(size=(60, 3))
    m = WindowModel(rng.normal(size=(4, 3)), -0.2, 2, 1.0)
    s, _ = predict_window(m, x)
    ref = decision_values(LinearModel(m.weights.ravel(), m.bias), vectorize_windows(x, 4, 2))
    np.testing.assert_allclose(s, ref, atol=1e-12)
    np.testing.assert_array_equal(s, ref)  # reshape round trip is exact


def test_noiseless_separable_zero_test_error():
    base = ToySpec(nbtot=2, nbrel=2, sigma=0.0, lags=(0, 3), seed=5)
    x, y = generate_toy(base)
    xt, yt = generate_toy(base.with_role("test", 2000))
    m = train_window_svm(x, y, 5, 2, 10.0)
    assert np.mean(predict_window(m, xt)[1] != yt) == 0.0


def test_channel_mismatch(rng):
    m = WindowModel(np.zeros((2, 2)), 0.0, 0, 1.0)
    with pytest.raises(ShapeError):
        predict_window(m, rng.normal(size=(5, 3)))


def test_invalid_window_args(rng):
    x = rng.normal(size=(20, 1))
    y = np.where(rng.normal(size=20) > 0, 1, -1)
    with pytest.raises(ValueError):
        train_window_svm(x, y, 0, 0, 1.0)
    with pytest.raises(ValueError):
        train_window_svm(x, y, 3, 5, 1.0)


def test_filter_models_nest_in_window_models(rng):
    x = rng.normal(size=(80, 4))
    F = rng.normal(size=(6, 4))
    fm = FilterModel(FilterBank(F, 3), LinearModel(rng.normal(size=4), 0.4), 1.0, 1.0)
    a = predict_filter(fm, x)[0]
    b = predict_window(fm.as_window_model(), x)[0]
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10 * max(1.0, np.abs(a).max()))


def _newton_step_time(x, y, f, reps=3):
    z = np.hstack([vectorize_windows(x, f, 0), np.ones((x.shape[0], 1))])
    best = np.inf
    for _ in range(reps):
        t = time.perf_counter()
        h = np.eye(z.shape[1]) + z.T @ z
        np.linalg.solve(h, z.T @ y)
        best = min(best, time.perf_counter() - t)
    return best


def test_newton_step_cost_scales_quadratically_in_f(rng):
    # O(N p^2) Hessian assembly dominates; doubling f doubles p
    x = rng.normal(size=(4000, 10))
    y = np.where(rng.normal(size=4000) > 0, 1.0, -1.0)
    ratio = _newton_step_time(x, y, 24) / _newton_step_time(x, y, 12)
    assert 2.5 <= ratio <= 8
