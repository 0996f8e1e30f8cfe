import math

import numpy as np
import pytest

from grounding.exceptions import DimensionMismatch, IndexOutOfRange, MissingReference
from optimization.policy import (
    IntervalPolicy,
    action_probs,
    format_probs,
    grad_log_prob,
    kl_and_grad,
    kl_to_ref,
    log_prob,
)


@pytest.fixture
def rng():
    return np.random.default_rng(31)


@pytest.fixture
def policy(rng):
    return IntervalPolicy.random(4, rng, scale=0.5)


class TestActionSpace:
    def test_action_round_trip(self):
        policy = IntervalPolicy.zeros(5)
        assert policy.num_actions == 15
        for action in range(policy.num_actions):
            assert policy.action_of(*policy.bins_of(action)) == action

    def test_row_major_order(self):
        policy = IntervalPolicy.zeros(3)
        assert [policy.bins_of(a) for a in range(6)] == [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]

    def test_reversed_pair_rejected(self):
        with pytest.raises(IndexOutOfRange):
            IntervalPolicy.zeros(3).action_of(2, 1)

    def test_wrong_weight_shape(self):
        with pytest.raises(DimensionMismatch):
            IntervalPolicy(3, np.zeros((6, 5)), np.zeros((6, 4)))


class TestProbabilities:
    def test_zero_weights_uniform(self, rng):
        policy = IntervalPolicy.zeros(4)
        probs = action_probs(policy, rng.normal(size=policy.feature_dim))
        assert probs == pytest.approx(np.full(10, 0.1), abs=1e-15)

    def test_normalized(self, policy, rng):
        for _ in range(100):
            observation = rng.normal(size=policy.feature_dim)
            assert abs(action_probs(policy, observation).sum() - 1.0) < 1e-12
            assert abs(format_probs(policy, observation).sum() - 1.0) < 1e-12

    def test_saturation(self):
        policy = IntervalPolicy.zeros(4)
        policy.weights[0, 3] = 20.0
        observation = np.zeros(policy.feature_dim)
        observation[0] = 1.0
        assert action_probs(policy, observation)[3] > 0.999

    def test_shift_invariance(self, policy, rng):
        observation = rng.normal(size=policy.feature_dim)
        shifted = policy.copy()
        # adds 7 to every interval logit
        shifted.weights = policy.weights + 7.0 * np.outer(observation, np.ones(policy.num_actions)) / (observation @ observation)
        assert action_probs(shifted, observation) == pytest.approx(action_probs(policy, observation), abs=1e-12)

    def test_observation_shape_checked(self, policy):
        with pytest.raises(DimensionMismatch):
            action_probs(policy, np.zeros(policy.feature_dim + 1))


class TestGradLogProb:
    def test_closed_form_at_zero_weights(self, rng):
        policy = IntervalPolicy.zeros(3)
        observation = rng.normal(size=policy.feature_dim)
        grad_w, grad_f = grad_log_prob(policy, observation, (2, 1))
        direction = np.full(6, -1 / 6)
        direction[2] += 1.0
        assert grad_w == pytest.approx(np.outer(observation, direction), abs=1e-15)
        assert grad_f.shape == policy.format_weights.shape

    def test_matches_central_differences(self, policy, rng):
        step = 1e-6
        for _ in range(20):
            observation = rng.normal(size=policy.feature_dim)
            action = (int(rng.integers(policy.num_actions)), int(rng.integers(policy.num_templates)))
            dir_w = rng.normal(size=policy.weights.shape)
            dir_f = rng.normal(size=policy.format_weights.shape)

            plus, minus = policy.copy(), policy.copy()
            plus.weights = policy.weights + step * dir_w
            plus.format_weights = policy.format_weights + step * dir_f
            minus.weights = policy.weights - step * dir_w
            minus.format_weights = policy.format_weights - step * dir_f
            numeric = (log_prob(plus, observation, action) - log_prob(minus, observation, action)) / (2 * step)

            grad_w, grad_f = grad_log_prob(policy, observation, action)
            analytic = np.sum(grad_w * dir_w) + np.sum(grad_f * dir_f)
            assert abs(numeric - analytic) < 1e-5

    def test_score_function_has_zero_mean(self, policy, rng):
        draws = 10 ** 5
        observation = rng.normal(size=policy.feature_dim)
        for probs in (action_probs(policy, observation), format_probs(policy, observation)):
            counts = np.bincount(rng.choice(probs.size, size=draws, p=probs), minlength=probs.size)
            # mean score per logit is freq - probs
            mean_score = counts / draws - probs
            standard_error = np.sqrt(probs * (1 - probs) / draws)
            assert np.all(np.abs(mean_score) < 4 * standard_error)

    def test_action_checked(self, policy):
        with pytest.raises(IndexOutOfRange):
            grad_log_prob(policy, np.zeros(policy.feature_dim), (policy.num_actions, 0))
        with pytest.raises(IndexOutOfRange):
            log_prob(policy, np.zeros(policy.feature_dim), (0, policy.num_templates))


class TestKL:
    def test_identical_policies(self, policy, rng):
        policy.snapshot_reference()
        assert kl_to_ref(policy, rng.normal(size=policy.feature_dim)) == 0.0

    def test_two_template_example(self):
        policy = IntervalPolicy(
            1,
            np.zeros((1, 1)),
            np.zeros((1, 2)),
            ref_weights=np.zeros((1, 1)),
            ref_format_weights=np.array([[0.0, math.log(3.0)]]),
        )
        assert kl_to_ref(policy, np.array([1.0])) == pytest.approx(0.143841, abs=1e-6)

    def test_non_negative(self, rng):
        for _ in range(200):
            policy = IntervalPolicy.random(3, rng, scale=2.0)
            policy.snapshot_reference()
            policy.weights = rng.normal(0.0, 2.0, policy.weights.shape)
            policy.format_weights = rng.normal(0.0, 2.0, policy.format_weights.shape)
            assert kl_to_ref(policy, rng.normal(size=policy.feature_dim)) >= 0.0

    def test_gradient_matches_central_differences(self, policy, rng):
        policy.snapshot_reference()
        policy.weights = policy.weights + rng.normal(0.0, 0.5, policy.weights.shape)
        observation = rng.normal(size=policy.feature_dim)
        direction = rng.normal(size=policy.weights.shape)
        step = 1e-6
        plus, minus = policy.copy(), policy.copy()
        plus.weights = policy.weights + step * direction
        minus.weights = policy.weights - step * direction
        numeric = (kl_to_ref(plus, observation) - kl_to_ref(minus, observation)) / (2 * step)
        _, (grad_w, _) = kl_and_grad(policy, observation)
        assert abs(numeric - np.sum(grad_w * direction)) < 1e-5

    def test_reference_is_frozen(self, policy):
        policy.snapshot_reference()
        before = policy.ref_weights.copy()
        policy.weights += 1.0
        assert np.array_equal(policy.ref_weights, before)
        with pytest.raises(ValueError):
            policy.ref_weights[0, 0] = 3.0

    def test_missing_reference(self, policy):
        with pytest.raises(MissingReference):
            kl_to_ref(policy, np.zeros(policy.feature_dim))
        with pytest.raises(MissingReference):
            policy.reference()
