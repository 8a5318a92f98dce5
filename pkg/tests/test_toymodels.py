"""Toy task and inner-optimizer tests (finite-difference gradient oracle)."""

import numpy as np
import pytest

from meshtrain.toymodels import (
    AdamWState,
    LossKind,
    ToyTask,
    inner_step,
    least_squares_solution,
    loss_and_gradient,
    make_classification_task,
    make_regression_task,
    split_task,
    train,
)


def central_difference_gradient(w, task, h=1e-5):
    w = np.asarray(w, dtype=np.float64)
    g = np.zeros_like(w)
    for i in range(w.size):
        up, down = w.copy(), w.copy()
        up[i] += h
        down[i] -= h
        g[i] = (loss_and_gradient(up, task)[0] - loss_and_gradient(down, task)[0]) / (2 * h)
    return g


class TestLossAndGradient:
    def test_gradient_zero_at_least_squares_solution(self):
        task = make_regression_task(seed=0)
        w_star = least_squares_solution(task)
        _, g = loss_and_gradient(w_star, task)
        assert np.max(np.abs(g)) <= 1e-9

    @pytest.mark.parametrize("kind", [LossKind.SQUARED_ERROR, LossKind.LOGISTIC])
    def test_matches_finite_differences(self, kind):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            if kind is LossKind.SQUARED_ERROR:
                task = make_regression_task(seed, n=32, dim=5)
            else:
                task = make_classification_task(seed, n=32, dim=5)
            w = rng.standard_normal(5)
            _, g = loss_and_gradient(w, task)
            fd = central_difference_gradient(w, task)
            denom = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(g - fd) / denom) <= 1e-5

    def test_doubling_targets_doubles_gradient_at_origin(self):
        task = make_regression_task(seed=3)
        doubled = ToyTask(task.inputs, 2.0 * task.targets, task.loss_kind)
        w0 = np.zeros(task.dim)
        _, g1 = loss_and_gradient(w0, task)
        _, g2 = loss_and_gradient(w0, doubled)
        np.testing.assert_allclose(g2, 2.0 * g1, rtol=1e-12)

    def test_dimension_mismatch(self):
        task = make_regression_task(seed=1, dim=4)
        with pytest.raises(ValueError):
            loss_and_gradient(np.zeros(5), task)

    def test_task_shape_validation(self):
        with pytest.raises(ValueError):
            ToyTask(inputs=np.zeros((3, 2)), targets=np.zeros(4))


class TestInnerStep:
    def test_zero_gradient_fixed_point(self):
        w = np.array([1.0, -2.0, 3.0])
        s = AdamWState.init(3, weight_decay=0.0)
        w2, s2 = inner_step(w, np.zeros(3), s)
        np.testing.assert_array_equal(w2, w)
        assert s2.step == 1

    def test_first_step_moves_by_lr_times_sign(self):
        # With fresh moments and wd=0: m_hat = g, v_hat = g^2, so the update
        # is -lr * g / (|g| + eps) = -lr * sign(g) up to eps.
        g = np.array([0.7, -1.3, 2.0, -0.01])
        w = np.zeros(4)
        s = AdamWState.init(4, lr=1e-3, weight_decay=0.0)
        w2, _ = inner_step(w, g, s)
        np.testing.assert_allclose(w2, -1e-3 * np.sign(g), rtol=1e-5)

    def test_descent_on_convex_quadratic(self):
        task = make_regression_task(seed=7, n=128, dim=6, noise=0.05)
        w0 = np.full(6, 2.0)
        # lr values across the documented stable range all descend
        for lr in (1e-4, 1e-3, 1e-2, 3e-2):
            s = AdamWState.init(6, lr=lr, weight_decay=0.0)
            _, _, losses = train(w0, task, steps=200, state=s)
            assert losses[-1] < losses[0]
            assert max(losses[150:]) < losses[0]

    def test_step_counter_increments(self):
        w = np.zeros(2)
        s = AdamWState.init(2)
        for expected in (1, 2, 3):
            w, s = inner_step(w, np.ones(2), s)
            assert s.step == expected

    def test_shape_mismatch(self):
        s = AdamWState.init(2)
        with pytest.raises(ValueError):
            inner_step(np.zeros(3), np.zeros(3), s)


class TestTaskHelpers:
    def test_split_is_partition(self):
        task = make_regression_task(seed=5, n=100)
        parts = split_task(task, 4, seed=1)
        assert sum(p.inputs.shape[0] for p in parts) == 100
        stacked = np.concatenate([p.targets for p in parts])
        assert np.sort(stacked).tolist() == np.sort(task.targets).tolist()

    def test_classification_targets_binary(self):
        task = make_classification_task(seed=9)
        assert set(np.unique(task.targets)).issubset({0.0, 1.0})
