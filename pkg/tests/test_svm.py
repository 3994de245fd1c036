import numpy as np
import pytest

from lmfilter.signal import LinearModel, ShapeError
from lmfilter.svm import decision_values, squared_hinge_objective, train_l2svm
from oracles import central_fd, grid_refine_svm, naive_scores, svm_objective


def tiny_instance(seed):
    rng = np.random.default_rng(seed)
    n, p = int(rng.integers(5, 21)), int(rng.integers(1, 4))
    z = rng.normal(size=(n, p))
    y = np.where(z[:, 0] + rng.normal(size=n) > 0, 1.0, -1.0)
    C = float(rng.choice([0.1, 1.0, 10.0]))
    return z, y, C


class TestTwoPoint:
    z = np.array([[1.0], [-1.0]])
    y = np.array([1, -1])

    def test_grid_oracle_agrees_with_calculus(self):
        # w = 2C/(1 + 2C) from the scalar stationarity condition
        ws = np.linspace(0, 1, 1_000_001)
        vals = 0.5 * ws ** 2 + np.maximum(0, 1 - ws) ** 2
        assert ws[np.argmin(vals)] == pytest.approx(2 / 3, abs=1e-6)
        assert vals.min() == pytest.approx(1 / 3, abs=1e-12)

    def test_solution(self):
        sol = train_l2svm(self.z, self.y, 1.0)
        assert sol.converged
        assert sol.model.weights[0] == pytest.approx(2 / 3, abs=1e-8)
        assert sol.model.bias == pytest.approx(0.0, abs=1e-8)
        assert sol.objective == pytest.approx(1 / 3, abs=1e-8)

    def test_objective_at_optimum(self):
        assert squared_hinge_objective(self.z, self.y, 1.0, LinearModel([2 / 3], 0.0)) == pytest.approx(1 / 3)


def test_label_symmetry(rng):
    z = rng.normal(size=(40, 3))
    y = np.where(z @ [1.0, -0.5, 0.2] + 0.3 > 0, 1, -1)
    a = train_l2svm(z, y, 2.0)
    b = train_l2svm(-z, -y, 2.0)
    np.testing.assert_allclose(b.model.weights, a.model.weights, atol=1e-8)
    assert b.model.bias == pytest.approx(-a.model.bias, abs=1e-8)
    assert b.objective == pytest.approx(a.objective, rel=1e-10)


def test_tiny_C(rng):
    z = rng.normal(size=(30, 4))
    y = np.where(rng.normal(size=30) > 0, 1, -1)
    sol = train_l2svm(z, y, 1e-12)
    assert np.linalg.norm(sol.model.weights) <= 1e-6


class TestObjective:
    def test_zero_model(self, rng):
        z = rng.normal(size=(9, 2))
        y = np.where(rng.normal(size=9) > 0, 1, -1)
        assert squared_hinge_objective(z, y, 3.0, LinearModel([0, 0], 0)) == pytest.approx(3.0 * 9 / 2)

    def test_separated_zero_loss(self):
        z = np.array([[2.0], [3.0], [-2.0]])
        y = np.array([1, 1, -1])
        m = LinearModel([1.0], 0.0)
        assert squared_hinge_objective(z, y, 5.0, m) == pytest.approx(0.5)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            squared_hinge_objective(rng.normal(size=(4, 2)), [1, -1, 1, -1], 1.0, LinearModel([1.0], 0))


class TestDecisionValues:
    def test_constant(self, rng):
        np.testing.assert_array_equal(decision_values(LinearModel(np.zeros(3), 2.5), rng.normal(size=(6, 3))), 2.5)

    def test_identity(self, rng):
        z = rng.normal(size=(6, 1))
        np.testing.assert_array_equal(decision_values(LinearModel([1.0], 0.0), z), z[:, 0])

    def test_matches_naive(self, rng):
        z = rng.normal(size=(25, 5))
        w = rng.normal(size=5)
        np.testing.assert_allclose(decision_values(LinearModel(w, 0.7), z), naive_scores(z, w, 0.7), atol=1e-12)

    def test_mismatch(self, rng):
        with pytest.raises(ShapeError):
            decision_values(LinearModel([1.0, 2.0], 0), rng.normal(size=(3, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_grid_oracle(seed):
    z, y, C = tiny_instance(seed)
    sol = train_l2svm(z, y, C)
    _, best = grid_refine_svm(z, y, C)
    assert abs(sol.objective - best) <= 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_numerical_gradient_vanishes(seed):
    z, y, C = tiny_instance(seed + 100)
    tol = 1e-8
    sol = train_l2svm(z, y, C, tol=tol)
    beta = np.append(sol.model.weights, sol.model.bias)
    g = central_fd(lambda b: svm_objective(z, y, C, b)[0], beta, 1e-6)
    assert np.linalg.norm(g) <= 10 * tol


def test_trace_monotone_and_warm_start(rng):
    z = rng.normal(size=(300, 6))
    y = np.where(z @ rng.normal(size=6) + 0.5 * rng.normal(size=300) > 0, 1, -1)
    a = train_l2svm(z, y, 10.0)
    assert all(b <= a_ + 1e-12 * abs(a_) for a_, b in zip(a.trace, a.trace[1:]))
    b = train_l2svm(z, y, 10.0, init=LinearModel(rng.normal(size=6) * 3, -2.0))
    assert b.objective == pytest.approx(a.objective, rel=1e-8)


def test_single_class_flagged():
    z = np.array([[0.5], [1.0], [2.0]])
    sol = train_l2svm(z, [1, 1, 1], 1.0)
    assert sol.single_class
    assert np.all(decision_values(sol.model, z) >= 1 - 1e-8)


def test_non_convergence_reported(rng):
    z = rng.normal(size=(200, 5))
    y = np.where(rng.normal(size=200) > 0, 1, -1)
    sol = train_l2svm(z, y, 100.0, max_iter=1)
    assert not sol.converged
    assert np.isfinite(sol.objective)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        train_l2svm([[1.0], [np.inf]], [1, -1], 1.0)
    with pytest.raises(ValueError):
        train_l2svm([[1.0], [2.0]], [1, 0], 1.0)
    with pytest.raises(ValueError):
        train_l2svm([[1.0], [2.0]], [1, -1], 0.0)
