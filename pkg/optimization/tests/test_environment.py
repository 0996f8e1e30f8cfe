import numpy as np
import pytest

from grounding.exceptions import DimensionMismatch, LengthMismatch, NoSalientClips, OutOfRange
from grounding.outputs import Schema, Task
from grounding.rewards import iou_reward, score_solution
from grounding.temporal import HighlightTarget, SaliencyTrack, Source, TimeInterval
from optimization.environment import (
    VALID_TEMPLATES,
    TaskInstance,
    action_payload,
    bin_interval,
    generate_dataset,
    gt_likelihood,
    sample_solutions,
)
from optimization.policy import IntervalPolicy, action_probs


@pytest.fixture
def dataset():
    return generate_dataset(16, 6, 0.0, Task.GROUNDING, rng_seed=1)


@pytest.fixture
def policy(dataset):
    return IntervalPolicy.random(6, np.random.default_rng(2), scale=0.3)


class TestGenerateDataset:
    def test_bin_edges(self):
        assert bin_interval(3, 7, 160.0, 16) == TimeInterval(30.0, 80.0)

    def test_deterministic(self):
        assert generate_dataset(8, 16, 0.3, rng_seed=5) == generate_dataset(8, 16, 0.3, rng_seed=5)
        assert generate_dataset(8, 16, 0.3, rng_seed=5) != generate_dataset(8, 16, 0.3, rng_seed=6)

    @pytest.mark.parametrize("task", [Task.GROUNDING, Task.HIGHLIGHT])
    def test_prefix_stable(self, task):
        assert generate_dataset(5, 8, 0.3, task, rng_seed=7) == generate_dataset(12, 8, 0.3, task, rng_seed=7)[:5]

    def test_targets_are_bin_aligned(self, dataset):
        for instance in dataset:
            start, end = instance.gt_bins()
            assert start <= end
            assert instance.target == bin_interval(start, end, instance.duration, instance.num_bins)

    def test_noiseless_decoder_is_exact(self):
        for instance in generate_dataset(64, 16, 0.0, rng_seed=3, duration=160.0):
            n = instance.num_bins
            start = int(np.argmax(instance.observation[:n]))
            end = int(np.argmax(instance.observation[n:]))
            decoded = bin_interval(start, end, instance.duration, n)
            assert iou_reward(decoded, instance.target) == 1.0

    def test_highlight_targets(self):
        for instance in generate_dataset(16, 8, 0.0, Task.HIGHLIGHT, rng_seed=4):
            assert instance.task is Task.HIGHLIGHT
            start, end = instance.gt_bins()
            assert instance.target.salient == frozenset(range(start, end + 1))
            assert max(instance.target.track.scores) == 1.0

    def test_invalid_arguments(self):
        with pytest.raises(OutOfRange):
            generate_dataset(4, 1, 0.0)
        with pytest.raises(OutOfRange):
            generate_dataset(4, 8, -0.1)


class TestTaskInstance:
    def test_highlight_without_salient_clips_rejected(self):
        track = SaliencyTrack(10.0, (0.1, 0.2, 0.3, 0.4))
        with pytest.raises(NoSalientClips):
            TaskInstance(0, 40.0, np.zeros(8), HighlightTarget(track))

    def test_explicit_salient_set_is_enough(self):
        track = SaliencyTrack(10.0, (0.1, 0.2, 0.3, 0.4))
        instance = TaskInstance(0, 40.0, np.zeros(8), HighlightTarget(track, {1, 2}))
        assert instance.gt_bins() == (1, 2)

    def test_track_must_cover_every_bin(self):
        track = SaliencyTrack(10.0, (0.1, 0.9, 0.3))
        with pytest.raises(LengthMismatch):
            TaskInstance(0, 40.0, np.zeros(8), HighlightTarget(track))


class TestSampleSolutions:
    def test_minimum_group(self, policy, dataset):
        sample = sample_solutions(policy, dataset[0], 2, 0)
        assert [s.source for s in sample.solutions] == [Source.ON_POLICY, Source.OFF_POLICY]
        assert len(sample.log_probs) == 1
        assert len(sample.actions) == 2

    def test_deterministic(self, policy, dataset):
        first = sample_solutions(policy, dataset[0], 4, 123)
        second = sample_solutions(policy, dataset[0], 4, 123)
        assert first.solutions == second.solutions
        assert first.log_probs == second.log_probs
        assert first.action_indices == second.action_indices

    def test_log_probs_bounded(self, policy, dataset):
        sample = sample_solutions(policy, dataset[1], 8, 7)
        assert all(np.isfinite(lp) and lp <= 0.0 for lp in sample.log_probs)

    @pytest.mark.parametrize("task", [Task.GROUNDING, Task.HIGHLIGHT])
    @pytest.mark.parametrize("schema", [Schema.ANSWER_ONLY, Schema.THINK_ANSWER])
    def test_ground_truth_scores_one(self, task, schema):
        instances = generate_dataset(8, 6, 0.0, task, rng_seed=9)
        policy = IntervalPolicy.zeros(6)
        for instance in instances:
            off = sample_solutions(policy, instance, 4, 0, schema).solutions[-1]
            assert off.source is Source.OFF_POLICY
            breakdown = score_solution(off.raw_text, instance.target, task, schema)
            assert breakdown.task_reward == pytest.approx(1.0, abs=1e-12)
            assert breakdown.format_reward == 1

    def test_injection_disabled(self, policy, dataset):
        sample = sample_solutions(policy, dataset[0], 4, 0, off_policy=False)
        assert all(s.source is Source.ON_POLICY for s in sample.solutions)
        assert sample.off_policy_action is None
        assert len(sample.log_probs) == 4

    def test_valid_templates_parse_back(self, policy, dataset):
        instance = dataset[2]
        sample = sample_solutions(policy, instance, 200, 11, off_policy=False)
        for solution, (action, template) in zip(sample.solutions, sample.action_indices):
            if template in VALID_TEMPLATES:
                assert solution.parsed == action_payload(instance, *policy.bins_of(action))
            else:
                assert solution.parsed is None

    def test_frequencies_match_probabilities(self, policy, dataset):
        draws = 10 ** 5
        instance = dataset[3]
        sample = sample_solutions(policy, instance, draws, 17, off_policy=False)
        counts = np.bincount([a for a, _ in sample.action_indices], minlength=policy.num_actions)
        probs = action_probs(policy, instance.observation)
        standard_error = np.sqrt(probs * (1 - probs) / draws)
        assert np.all(np.abs(counts / draws - probs) < 4 * standard_error)

    def test_errors(self, policy, dataset):
        with pytest.raises(OutOfRange):
            sample_solutions(policy, dataset[0], 1, 0)
        with pytest.raises(DimensionMismatch):
            sample_solutions(IntervalPolicy.zeros(4), dataset[0], 4, 0)


def test_gt_likelihood_uniform_policy(dataset):
    policy = IntervalPolicy.zeros(6)
    # 21 interval actions times 4 templates
    assert gt_likelihood(policy, dataset, Schema.ANSWER_ONLY) == pytest.approx(1 / 84, abs=1e-12)
