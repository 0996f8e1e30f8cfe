"""
Synthetic temporal-grounding / highlight environment.

Each instance encodes its ground-truth bin pair in the observation
(``concat(one_hot(i), one_hot(j)) + noise``), so a noiseless dataset is
exactly identifiable and the optimum is representable by the linear policy.
The ground-truth annotation, rendered canonically, is the off-policy solution
injected into every group.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from grounding.exceptions import DimensionMismatch, LengthMismatch, NoSalientClips, OutOfRange
from grounding.outputs import (
    HighlightPayload,
    Schema,
    Task,
    emit_output,
    extract_answer,
    render_payload,
)
from grounding.temporal import (
    HighlightTarget,
    SaliencyTrack,
    Solution,
    Source,
    TimeInterval,
    new_interval,
)

from .policy import IntervalPolicy, action_probs, format_probs, log_prob

logger = logging.getLogger(__name__)

DECIMALS = 3
SECONDS_PER_BIN = 10.0
THINK_TEXT = "locating the queried event on the timeline"

# template index -> how the answer gets rendered
ANSWER_ONLY_TEMPLATE = 0
THINK_ANSWER_TEMPLATE = 1
VALID_TEMPLATES = (ANSWER_ONLY_TEMPLATE, THINK_ANSWER_TEMPLATE)


@dataclass(frozen=True)
class TaskInstance:
    instance_id: int
    duration: float
    observation: np.ndarray
    target: Union[TimeInterval, HighlightTarget]

    def __post_init__(self):
        observation = np.array(self.observation, dtype=float)
        observation.setflags(write=False)
        object.__setattr__(self, "observation", observation)
        if isinstance(self.target, TimeInterval) and self.target.end > self.duration + 1e-9:
            raise OutOfRange(
                "Instance %(id)s: ground truth ends after the video (%(end)s > %(d)s).",
                params={"id": self.instance_id, "end": self.target.end, "d": self.duration},
            )
        if isinstance(self.target, HighlightTarget):
            if self.target.track.num_clips != self.num_bins:
                raise LengthMismatch(
                    "Instance %(id)s: track has %(c)s clips for %(n)s bins.",
                    params={"id": self.instance_id, "c": self.target.track.num_clips, "n": self.num_bins},
                )
            if not self.target.salient:
                raise NoSalientClips(
                    "Instance %(id)s: highlight target has no salient clip to train towards.",
                    params={"id": self.instance_id},
                )

    @property
    def task(self) -> Task:
        return Task.HIGHLIGHT if isinstance(self.target, HighlightTarget) else Task.GROUNDING

    @property
    def num_bins(self) -> int:
        return self.observation.shape[0] // 2

    def gt_bins(self) -> Tuple[int, int]:
        clip_len = self.duration / self.num_bins
        if isinstance(self.target, TimeInterval):
            start = int(round(self.target.start / clip_len))
            end = int(round(self.target.end / clip_len)) - 1
            return start, max(start, end)
        salient = sorted(self.target.salient)
        return salient[0], salient[-1]

    def __eq__(self, other):
        if not isinstance(other, TaskInstance):
            return NotImplemented
        return (
            self.instance_id == other.instance_id
            and self.duration == other.duration
            and np.array_equal(self.observation, other.observation)
            and self.target == other.target
        )


@dataclass(frozen=True)
class GroupSample:
    instance: TaskInstance
    solutions: tuple
    log_probs: tuple
    action_indices: tuple
    off_policy_action: Optional[Tuple[int, int]] = None

    @property
    def actions(self) -> list:
        """Actions aligned with ``solutions``: on-policy draws, then the off-policy entry."""
        actions = list(self.action_indices)
        if self.off_policy_action is not None:
            actions.append(self.off_policy_action)
        return actions

    @property
    def sources(self) -> list:
        return [s.source for s in self.solutions]


def bin_interval(start_bin: int, end_bin: int, duration: float, num_bins: int) -> TimeInterval:
    clip_len = duration / num_bins
    return new_interval(
        round(start_bin * clip_len, DECIMALS), round((end_bin + 1) * clip_len, DECIMALS)
    )


def action_payload(instance: TaskInstance, start_bin: int, end_bin: int):
    if instance.task is Task.GROUNDING:
        return bin_interval(start_bin, end_bin, instance.duration, instance.num_bins)
    return HighlightPayload(tuple((k, 1.0) for k in range(start_bin, end_bin + 1)))


def gt_payload(instance: TaskInstance):
    if instance.task is Task.GROUNDING:
        return instance.target
    return HighlightPayload(tuple(enumerate(instance.target.track.scores)))


def render(payload, template: int) -> str:
    """Templates 0 and 1 are the two schemas; 2 and 3 are malformed on purpose."""
    if template == ANSWER_ONLY_TEMPLATE:
        return emit_output(payload, None, Schema.ANSWER_ONLY)
    if template == THINK_ANSWER_TEMPLATE:
        return emit_output(payload, THINK_TEXT, Schema.THINK_ANSWER)
    if template == 2:
        return f"<Think>{THINK_TEXT}</Think><Answer>{render_payload(payload)}"
    return f"The event happens at {render_payload(payload)}."


def schema_template(schema: Schema) -> int:
    return ANSWER_ONLY_TEMPLATE if Schema(schema) is Schema.ANSWER_ONLY else THINK_ANSWER_TEMPLATE


def gt_action(instance: TaskInstance, policy: IntervalPolicy, schema: Schema) -> Tuple[int, int]:
    return policy.action_of(*instance.gt_bins()), schema_template(schema)


def sample_solutions(
    policy: IntervalPolicy,
    instance: TaskInstance,
    G: int,
    rng_seed,
    schema: Schema = Schema.ANSWER_ONLY,
    off_policy: bool = True,
) -> GroupSample:
    """
    Draws G-1 on-policy (interval, template) pairs and appends the ground
    truth as the off-policy solution. With ``off_policy=False`` all G
    solutions are drawn from the policy.
    """
    if G < 2:
        raise OutOfRange("A group needs G ≥ 2 solutions, got %(g)s.", params={"g": G})
    if instance.observation.shape != (policy.feature_dim,):
        raise DimensionMismatch(
            "Instance %(id)s observation has %(n)s features, policy expects %(d)s.",
            params={
                "id": instance.instance_id,
                "n": instance.observation.shape[0],
                "d": policy.feature_dim,
            },
        )
    rng = np.random.default_rng(rng_seed)
    draws = G - 1 if off_policy else G
    interval_p = action_probs(policy, instance.observation)
    template_p = format_probs(policy, instance.observation)
    actions = rng.choice(policy.num_actions, size=draws, p=interval_p)
    templates = rng.choice(policy.num_templates, size=draws, p=template_p)

    solutions, log_probs, action_indices = [], [], []
    for action, template in zip(actions.tolist(), templates.tolist()):
        raw_text = render(action_payload(instance, *policy.bins_of(action)), template)
        solutions.append(
            Solution(raw_text, extract_answer(raw_text, schema, instance.task), Source.ON_POLICY)
        )
        log_probs.append(log_prob(policy, instance.observation, (action, template)))
        action_indices.append((action, template))

    off_action = None
    if off_policy:
        off_action = gt_action(instance, policy, schema)
        payload = gt_payload(instance)
        solutions.append(Solution(render(payload, off_action[1]), payload, Source.OFF_POLICY))

    return GroupSample(
        instance, tuple(solutions), tuple(log_probs), tuple(action_indices), off_action
    )


def _encode(start_bin: int, end_bin: int, num_bins: int, noise: np.ndarray) -> np.ndarray:
    observation = np.zeros(2 * num_bins)
    observation[start_bin] = 1.0
    observation[num_bins + end_bin] = 1.0
    return observation + noise


def _highlight_target(start_bin, end_bin, num_bins, clip_len, rng) -> HighlightTarget:
    scores = np.round(rng.uniform(0.0, 0.4, num_bins), DECIMALS)
    inside = np.round(rng.uniform(0.6, 1.0, end_bin - start_bin + 1), DECIMALS)
    scores[start_bin:end_bin + 1] = inside
    # every highlight carries one top-label clip
    scores[start_bin + int(rng.integers(end_bin - start_bin + 1))] = 1.0
    track = SaliencyTrack(clip_len, tuple(scores.tolist()))
    return HighlightTarget(track, frozenset(range(start_bin, end_bin + 1)))


def generate_dataset(
    num_instances: int,
    num_bins: int,
    obs_noise: float,
    task: Task = Task.GROUNDING,
    rng_seed=0,
    duration: Optional[float] = None,
) -> list:
    if num_bins < 2:
        raise OutOfRange("Need at least 2 bins, got %(n)s.", params={"n": num_bins})
    if obs_noise < 0:
        raise OutOfRange("Observation noise can't be negative.")
    task = Task(task)
    duration = SECONDS_PER_BIN * num_bins if duration is None else float(duration)
    rng = np.random.default_rng(rng_seed)
    rows, cols = np.triu_indices(num_bins)

    dataset = []
    for instance_id in range(num_instances):
        pair = int(rng.integers(rows.size))
        start_bin, end_bin = int(rows[pair]), int(cols[pair])
        noise = rng.normal(0.0, 1.0, 2 * num_bins) * obs_noise
        if task is Task.GROUNDING:
            target = bin_interval(start_bin, end_bin, duration, num_bins)
        else:
            target = _highlight_target(start_bin, end_bin, num_bins, duration / num_bins, rng)
        dataset.append(
            TaskInstance(instance_id, duration, _encode(start_bin, end_bin, num_bins, noise), target)
        )
    logger.debug("generated %s %s instances over %s bins", num_instances, task.value, num_bins)
    return dataset


def gt_likelihood(policy: IntervalPolicy, dataset: Sequence[TaskInstance], schema: Schema) -> float:
    """Mean π_θ(GT action | observation) over the dataset."""
    if not dataset:
        return 0.0
    values = [
        np.exp(log_prob(policy, inst.observation, gt_action(inst, policy, schema)))
        for inst in dataset
    ]
    return float(np.mean(values))
