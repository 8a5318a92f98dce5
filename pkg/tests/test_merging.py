"""Outer-optimizer tests: FedAvg reduction, linearity, momentum recurrence."""

import numpy as np
import pytest

from meshtrain.merging import (
    ContributionWeight,
    OuterOptimizerState,
    PseudoGradient,
    contribution_weights,
    outer_update,
    param_hash,
    pseudo_gradient,
    requantize_after_merge,
    staleness_factor,
)


def uniform(node_ids):
    return [ContributionWeight(n, 1.0 / len(node_ids)) for n in node_ids]


def fedavg_state(dim):
    return OuterOptimizerState.init(dim, eta=1.0, mu=0.0)


class TestPseudoGradient:
    def test_direct_subtraction(self):
        g = pseudo_gradient([1.0, 2.0], [0.5, 1.5], "a", inner_steps=5)
        assert g.delta.tolist() == [0.5, 0.5]

    def test_no_progress_node(self):
        base = np.array([3.0, -1.0])
        g = pseudo_gradient(base, base, "a", inner_steps=1)
        assert np.all(g.delta == 0.0)

    def test_inverse_relation(self):
        rng = np.random.default_rng(0)
        base = rng.standard_normal(6)
        step = rng.standard_normal(6)
        g = pseudo_gradient(base, base - step, "a", inner_steps=1)
        np.testing.assert_allclose(g.delta, step)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pseudo_gradient([1.0], [1.0, 2.0], "a", inner_steps=1)


class TestStaleness:
    def test_values(self):
        assert staleness_factor(0) == 1.0
        assert staleness_factor(1) == 0.5
        assert staleness_factor(9) == pytest.approx(0.1)

    def test_monotone_non_increasing(self):
        factors = [staleness_factor(s) for s in range(20)]
        assert all(a >= b for a, b in zip(factors, factors[1:]))
        assert all(0 < f <= 1 for f in factors)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            staleness_factor(-1)


class TestOuterUpdate:
    def test_fedavg_symmetric_case(self):
        # Two nodes at [0,0] and [2,2] from base [1,1]: mean of locals.
        base = np.array([1.0, 1.0])
        grads = [
            pseudo_gradient(base, np.array([0.0, 0.0]), "a", 10),
            pseudo_gradient(base, np.array([2.0, 2.0]), "b", 10),
        ]
        merged, _ = outer_update(base, grads, uniform(["a", "b"]), fedavg_state(2))
        np.testing.assert_allclose(merged, [1.0, 1.0], atol=1e-12)

    def test_single_node_degenerate_fedavg(self):
        base = np.array([1.0, -1.0, 0.5])
        local = np.array([0.3, 0.2, 0.1])
        grads = [pseudo_gradient(base, local, "solo", 10)]
        merged, _ = outer_update(
            base, grads, [ContributionWeight("solo", 1.0)], fedavg_state(3)
        )
        np.testing.assert_allclose(merged, local, atol=1e-12)

    def test_fedavg_equivalence_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            dim = rng.integers(1, 12)
            n = rng.integers(1, 6)
            base = rng.standard_normal(dim)
            locals_ = [rng.standard_normal(dim) for _ in range(n)]
            w = rng.random(n) + 0.01
            w /= w.sum()
            grads = [
                pseudo_gradient(base, loc, f"n{i}", 5) for i, loc in enumerate(locals_)
            ]
            weights = [ContributionWeight(f"n{i}", w[i]) for i in range(n)]
            merged, _ = outer_update(base, grads, weights, fedavg_state(dim))
            expected = sum(w[i] * locals_[i] for i in range(n))
            assert np.max(np.abs(merged - expected)) <= 1e-12

    def test_linearity_in_each_delta(self):
        rng = np.random.default_rng(7)
        base = rng.standard_normal(5)
        d1, d2 = rng.standard_normal(5), rng.standard_normal(5)
        w = [ContributionWeight("a", 0.3), ContributionWeight("b", 0.7)]

        def merge(scale):
            grads = [
                PseudoGradient(scale * d1, "a", 5),
                PseudoGradient(d2, "b", 5),
            ]
            merged, _ = outer_update(base, grads, w, fedavg_state(5))
            return base - merged  # the applied aggregate

        a1, a3 = merge(1.0), merge(3.0)
        # Scaling node a's delta by 3 scales its contribution by exactly 3 * w_a.
        np.testing.assert_allclose(a3 - a1, 2.0 * 0.3 * d1, atol=1e-12)

    def test_zero_delta_fixed_point(self):
        base = np.array([1.0, 2.0])
        grads = [PseudoGradient(np.zeros(2), "a", 5)]
        state = OuterOptimizerState.init(2, eta=0.7, mu=0.9)
        merged, state2 = outer_update(base, grads, [ContributionWeight("a", 1.0)], state)
        np.testing.assert_array_equal(merged, base)
        assert np.all(state2.momentum == 0.0)

    def test_momentum_recurrence_two_steps(self):
        # Identical aggregates a: update1 = (1+mu) a, update2 = (1+mu+mu^2) a.
        mu, eta = 0.9, 1.0
        base = np.zeros(3)
        delta = np.array([1.0, -2.0, 0.5])
        grads = [PseudoGradient(delta, "a", 5)]
        w = [ContributionWeight("a", 1.0)]
        state = OuterOptimizerState.init(3, eta=eta, mu=mu)

        theta1, state = outer_update(base, grads, w, state)
        first = base - theta1
        theta2, state = outer_update(theta1, grads, w, state)
        second = theta1 - theta2
        np.testing.assert_allclose(first, (1 + mu) * delta, rtol=1e-12)
        np.testing.assert_allclose(second, (1 + mu + mu * mu) * delta, rtol=1e-12)

    def test_staleness_downweights(self):
        base = np.zeros(2)
        fresh = PseudoGradient(np.array([1.0, 1.0]), "a", 5, staleness=0)
        stale = PseudoGradient(np.array([1.0, 1.0]), "a", 5, staleness=1)
        w = [ContributionWeight("a", 1.0)]
        m_fresh, _ = outer_update(base, [fresh], w, fedavg_state(2))
        m_stale, _ = outer_update(base, [stale], w, fedavg_state(2))
        np.testing.assert_allclose(base - m_stale, 0.5 * (base - m_fresh))

    def test_missing_weight_rejected(self):
        grads = [PseudoGradient(np.zeros(2), "a", 5)]
        with pytest.raises(ValueError, match="missing"):
            outer_update(np.zeros(2), grads, [ContributionWeight("b", 1.0)],
                         fedavg_state(2))

    def test_empty_grads_rejected(self):
        with pytest.raises(ValueError):
            outer_update(np.zeros(2), [], [], fedavg_state(2))


class TestWeightSource:
    def test_normalizes_scores(self):
        w = contribution_weights({"a": 2.0, "b": 6.0}, ["a", "b"])
        assert [x.weight for x in w] == [0.25, 0.75]

    def test_uniform_bootstrap_when_no_scores(self):
        w = contribution_weights({}, ["a", "b", "c", "d"])
        assert [x.weight for x in w] == [0.25] * 4

    def test_unknown_participants_score_zero(self):
        w = contribution_weights({"a": 1.0}, ["a", "b"])
        assert [x.weight for x in w] == [1.0, 0.0]


class TestArtifacts:
    def test_requantize_delegates(self):
        t = requantize_after_merge([0.4, -0.2, 0.1, -0.5])
        assert t.values.tolist() == [1, -1, 0, -1]

    def test_param_hash_stable_and_sensitive(self):
        a = np.array([1.0, 2.0, 3.0])
        assert param_hash(a) == param_hash(a.copy())
        assert param_hash(a) != param_hash(a + 1e-12)
        assert len(param_hash(a)) == 64
