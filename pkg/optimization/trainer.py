"""Mixed-policy GRPO training loop, run in an answer-only phase then a think-answer phase."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from grounding.exceptions import ConfigInvalid, DegenerateSample, DimensionMismatch
from grounding.outputs import Schema
from grounding.rewards import score_solution
from grounding.temporal import RewardGroup, ShapingConfig, Source

from .advantage import Strategy, compute_advantages, sample_skewness
from .environment import TaskInstance, gt_action, gt_likelihood, sample_solutions
from .policy import IntervalPolicy, grad_log_prob, kl_and_grad, kl_to_ref, log_prob

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PHASES = (Schema.ANSWER_ONLY, Schema.THINK_ANSWER)
FINAL_FRACTION = 0.2
GRPO_LABEL = "grpo"
SFT_LABEL = "sft"


@dataclass(frozen=True)
class TrainConfig:
    group_size: int = 4
    clip_epsilon: float = 0.2
    kl_beta: float = 0.04
    learning_rate: float = 0.05
    steps_per_phase: tuple = (1000, 1000)
    batch_size: int = 8
    strategy: Strategy = Strategy.SHAPE
    off_policy: bool = True
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    w_f: float = 0.5
    seed: int = 0
    # ascend the ground-truth log-likelihood instead of the GRPO objective
    supervised: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.supervised:
            object.__setattr__(self, "strategy", Strategy.NONE)
            object.__setattr__(self, "off_policy", False)
        object.__setattr__(self, "steps_per_phase", tuple(int(s) for s in self.steps_per_phase))
        if isinstance(self.shaping, dict):
            object.__setattr__(self, "shaping", ShapingConfig(**self.shaping))

        def invalid(name, rule):
            raise ConfigInvalid(
                "%(field)s: %(rule)s (got %(value)s)",
                params={"field": name, "rule": rule, "value": getattr(self, name)},
            )

        if self.group_size < 2:
            invalid("group_size", "G ≥ 2")
        if not 0 < self.clip_epsilon < 1:
            invalid("clip_epsilon", "ε ∈ (0, 1)")
        if self.kl_beta < 0:
            invalid("kl_beta", "β ≥ 0")
        if self.learning_rate <= 0:
            invalid("learning_rate", "learning_rate > 0")
        if len(self.steps_per_phase) != len(PHASES) or min(self.steps_per_phase) < 0:
            invalid("steps_per_phase", "two non-negative step counts")
        if self.batch_size < 1:
            invalid("batch_size", "batch_size ≥ 1")
        if self.w_f < 0:
            invalid("w_f", "w_f ≥ 0")
        if self.strategy in (Strategy.DOWNSCALE, Strategy.ANCHOR) and not self.off_policy:
            invalid("strategy", "downscale and anchor need off-policy injection")
        if self.strategy is Strategy.ANCHOR and self.group_size < 3:
            invalid("group_size", "anchor needs G ≥ 3 (two on-policy solutions)")

    @property
    def label(self) -> str:
        if self.supervised:
            return SFT_LABEL
        return self.strategy.value if self.off_policy else GRPO_LABEL

    @property
    def total_steps(self) -> int:
        return sum(self.steps_per_phase)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["strategy"] = self.strategy.value
        data["steps_per_phase"] = list(self.steps_per_phase)
        return data


@dataclass(frozen=True)
class StepRecord:
    step: int
    phase: Schema
    strategy: str
    rewards: list
    advantages: list
    top1_rewards: list
    skewness: Optional[float]
    kl: float
    objective: float
    anchor_warnings: int = 0


@dataclass
class TrainResult:
    policy: IntervalPolicy
    summary: dict


def grpo_objective(sample, advantages, policy: IntervalPolicy, old_log_probs, cfg: TrainConfig):
    """
    (1/G) Σ min(ρ_i A_i, clip(ρ_i, 1-ε, 1+ε) A_i) - β KL(π_θ ‖ π_ref) and its
    gradient for one group. ``advantages`` and ``old_log_probs`` are aligned
    with ``sample.actions`` (on-policy draws, then the off-policy entry).
    """
    actions = sample.actions
    advantages = np.asarray(advantages, dtype=float)
    old_log_probs = np.asarray(old_log_probs, dtype=float)
    if advantages.shape != (len(actions),) or old_log_probs.shape != (len(actions),):
        raise DimensionMismatch(
            "Got %(a)s advantages and %(o)s old log-probs for %(g)s solutions.",
            params={"a": advantages.size, "o": old_log_probs.size, "g": len(actions)},
        )
    observation = sample.instance.observation
    group_size = len(actions)
    low, high = 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon

    grad_w = np.zeros_like(policy.weights)
    grad_f = np.zeros_like(policy.format_weights)
    surrogate = 0.0
    for action, advantage, old in zip(actions, advantages, old_log_probs):
        ratio = math.exp(log_prob(policy, observation, action) - old)
        unclipped = ratio * advantage
        clipped = min(max(ratio, low), high) * advantage
        surrogate += min(unclipped, clipped)
        # the clipped branch is constant in θ
        if unclipped <= clipped:
            score_w, score_f = grad_log_prob(policy, observation, action)
            scale = advantage * ratio / group_size
            grad_w += scale * score_w
            grad_f += scale * score_f

    kl, (kl_w, kl_f) = kl_and_grad(policy, observation)
    grad_w -= cfg.kl_beta * kl_w
    grad_f -= cfg.kl_beta * kl_f
    return surrogate / group_size - cfg.kl_beta * kl, (grad_w, grad_f)


def _skewness(values, sigma_floor) -> Optional[float]:
    try:
        return sample_skewness(values, sigma_floor)
    except DegenerateSample:
        return None


def train_step(
    policy: IntervalPolicy,
    batch: Sequence[TaskInstance],
    cfg: TrainConfig,
    rng: np.random.Generator,
    phase: Schema = Schema.ANSWER_ONLY,
    step: int = 0,
) -> StepRecord:
    """Gradients are summed over the batch's groups; one update per call."""
    phase = Schema(phase)
    grad_w = np.zeros_like(policy.weights)
    grad_f = np.zeros_like(policy.format_weights)
    rewards, advantages, top1, objectives, kls = [], [], [], [], []
    anchor_warnings = 0

    for instance in batch:
        sample = sample_solutions(
            policy, instance, cfg.group_size, int(rng.integers(2 ** 32)), phase, cfg.off_policy
        )
        breakdowns = [
            score_solution(s.raw_text, instance.target, instance.task, phase, cfg.w_f)
            for s in sample.solutions
        ]
        group = RewardGroup(tuple(b.total for b in breakdowns), tuple(sample.sources))
        advantage = compute_advantages(group, cfg.strategy, cfg.shaping)

        old_log_probs = list(sample.log_probs)
        if sample.off_policy_action is not None:
            # π_old = π_θ: the ground truth is scored under the current policy
            old_log_probs.append(log_prob(policy, instance.observation, sample.off_policy_action))
        objective, (group_w, group_f) = grpo_objective(
            sample, advantage.values, policy, old_log_probs, cfg
        )
        grad_w += group_w
        grad_f += group_f

        off_index = group.off_policy_index
        if (
            cfg.strategy is Strategy.ANCHOR
            and not advantage.degenerate
            and advantage.values[off_index] <= 0
        ):
            anchor_warnings += 1
            logger.warning(
                "step %s instance %s: anchored off-policy advantage %.4f is not positive",
                step, instance.instance_id, advantage.values[off_index],
            )

        rewards.append(list(group.rewards))
        advantages.append(list(advantage.values))
        top1.append(
            max(
                b.task_reward
                for b, s in zip(breakdowns, sample.solutions)
                if s.source is Source.ON_POLICY
            )
        )
        objectives.append(objective)
        kls.append(kl_to_ref(policy, instance.observation))

    policy.weights += cfg.learning_rate * grad_w
    policy.format_weights += cfg.learning_rate * grad_f

    pooled = [value for group_values in advantages for value in group_values]
    record = StepRecord(
        step=step,
        phase=phase,
        strategy=cfg.label,
        rewards=rewards,
        advantages=advantages,
        top1_rewards=top1,
        skewness=_skewness(pooled, cfg.shaping.sigma_floor),
        kl=float(np.mean(kls)),
        objective=float(np.mean(objectives)),
        anchor_warnings=anchor_warnings,
    )
    logger.debug(
        "step %s [%s] top1=%.3f kl=%.5f objective=%.5f",
        step, phase.value, float(np.mean(top1)), record.kl, record.objective,
    )
    return record


def sft_step(
    policy: IntervalPolicy,
    batch: Sequence[TaskInstance],
    cfg: TrainConfig,
    rng: np.random.Generator,
    phase: Schema = Schema.ANSWER_ONLY,
    step: int = 0,
) -> StepRecord:
    """
    Supervised baseline: one ascent step on Σ log π_θ(GT action) over the
    batch. On-policy groups are still drawn and scored, without advantages,
    so top-1 rewards stay comparable with the GRPO runs.
    """
    phase = Schema(phase)
    grad_w = np.zeros_like(policy.weights)
    grad_f = np.zeros_like(policy.format_weights)
    rewards, advantages, top1, objectives, kls = [], [], [], [], []

    for instance in batch:
        sample = sample_solutions(
            policy, instance, cfg.group_size, int(rng.integers(2 ** 32)), phase, off_policy=False
        )
        breakdowns = [
            score_solution(s.raw_text, instance.target, instance.task, phase, cfg.w_f)
            for s in sample.solutions
        ]
        target_action = gt_action(instance, policy, phase)
        score_w, score_f = grad_log_prob(policy, instance.observation, target_action)
        grad_w += score_w
        grad_f += score_f

        rewards.append([b.total for b in breakdowns])
        advantages.append([])
        top1.append(max(b.task_reward for b in breakdowns))
        objectives.append(log_prob(policy, instance.observation, target_action))
        kls.append(kl_to_ref(policy, instance.observation))

    policy.weights += cfg.learning_rate * grad_w
    policy.format_weights += cfg.learning_rate * grad_f

    record = StepRecord(
        step=step,
        phase=phase,
        strategy=cfg.label,
        rewards=rewards,
        advantages=advantages,
        top1_rewards=top1,
        skewness=None,
        kl=float(np.mean(kls)),
        objective=float(np.mean(objectives)),
    )
    logger.debug(
        "step %s [%s] sft top1=%.3f kl=%.5f log-likelihood=%.5f",
        step, phase.value, float(np.mean(top1)), record.kl, record.objective,
    )
    return record


def _quantiles(values) -> Optional[dict]:
    if not values:
        return None
    q1, median, q3 = (float(q) for q in np.quantile(np.asarray(values, dtype=float), [0.25, 0.5, 0.75]))
    return {"q1": q1, "median": median, "q3": q3, "iqr": q3 - q1, "mean": float(np.mean(values))}


def _mean_abs(values) -> Optional[float]:
    values = [abs(v) for v in values if v is not None]
    return float(np.mean(values)) if values else None


def train(
    config: TrainConfig,
    dataset: Sequence[TaskInstance],
    sinks=(),
    policy: Optional[IntervalPolicy] = None,
) -> TrainResult:
    if not dataset:
        raise ConfigInvalid("dataset: at least one instance is required")
    if policy is None:
        policy = IntervalPolicy.zeros(dataset[0].num_bins, dataset[0].observation.shape[0])

    step_fn = sft_step if config.supervised else train_step
    rng = np.random.default_rng(config.seed)
    step = 0
    top1_by_step = []
    phases = {}
    all_skews = []
    anchor_warnings = 0
    last_kl = None

    for phase, steps in zip(PHASES, config.steps_per_phase):
        if steps == 0:
            continue
        policy.snapshot_reference()
        logger.info("phase %s: %s steps, reference policy snapshotted", phase.value, steps)
        likelihood_start = gt_likelihood(policy, dataset, phase)
        skews = []
        for _ in range(steps):
            indices = rng.integers(len(dataset), size=config.batch_size)
            batch = [dataset[i] for i in indices.tolist()]
            record = step_fn(policy, batch, config, rng, phase, step)
            for sink in sinks:
                sink.write(record)
            top1_by_step.append(record.top1_rewards)
            skews.append(record.skewness)
            all_skews.append(record.skewness)
            anchor_warnings += record.anchor_warnings
            last_kl = record.kl
            step += 1
        phases[phase.value] = {
            "steps": steps,
            "mean_abs_skewness": _mean_abs(skews),
            "gt_likelihood_start": likelihood_start,
            "gt_likelihood_end": gt_likelihood(policy, dataset, phase),
        }
        logger.info(
            "phase %s done: mean |skewness| %s, GT likelihood %.4f -> %.4f",
            phase.value,
            phases[phase.value]["mean_abs_skewness"],
            likelihood_start,
            phases[phase.value]["gt_likelihood_end"],
        )

    window = math.ceil(FINAL_FRACTION * len(top1_by_step))
    final_top1 = [value for rewards in top1_by_step[len(top1_by_step) - window:] for value in rewards]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "strategy": config.label,
        "config": config.as_dict(),
        "steps": step,
        "final_window_steps": window,
        "top1": _quantiles(final_top1),
        "phases": phases,
        "mean_abs_skewness": _mean_abs(all_skews),
        "anchor_warnings": anchor_warnings,
        "final_kl": last_kl,
    }
    return TrainResult(policy=policy, summary=summary)
