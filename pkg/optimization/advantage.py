"""
Group-relative advantage estimation over mixed on/off-policy reward groups.

Strategies regulate how the injected off-policy (ground-truth) solution
enters the advantage computation:

    none       joint normalization over all G rewards
    downscale  cap the off-policy reward at kappa * r_max, then normalize
    anchor     normalize on-policy rewards only; off-policy advantage is
               lambda_off times the best on-policy advantage
    shape      piecewise log/exp reward shaping, then normalize
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from grounding.exceptions import (
    DegenerateSample,
    NoOffPolicyEntry,
    OutOfRange,
    TooFewOnPolicy,
)
from grounding.temporal import RewardGroup, ShapingConfig


class Strategy(str, enum.Enum):
    NONE = "none"
    DOWNSCALE = "downscale"
    ANCHOR = "anchor"
    SHAPE = "shape"


@dataclass(frozen=True)
class AdvantageVector:
    values: tuple
    group_mean: float
    group_std: float
    strategy: Strategy
    degenerate: bool

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _normalize(rewards: np.ndarray, sigma_floor: float):
    mean = float(rewards.mean())
    std = float(rewards.std())
    if std < sigma_floor:
        return np.zeros_like(rewards), mean, std, True
    return (rewards - mean) / std, mean, std, False


def normalize_group(
    group: RewardGroup, cfg: ShapingConfig, strategy: Strategy = Strategy.NONE
) -> AdvantageVector:
    """Population statistics over every reward in the group, on- and off-policy."""
    values, mean, std, degenerate = _normalize(
        np.asarray(group.rewards, dtype=float), cfg.sigma_floor
    )
    return AdvantageVector(tuple(values.tolist()), mean, std, Strategy(strategy), degenerate)


def _require_off_policy(group: RewardGroup) -> int:
    index = group.off_policy_index
    if index is None:
        raise NoOffPolicyEntry("The strategy needs an off-policy solution in the group.")
    return index


def downscale_offpolicy(group: RewardGroup, cfg: ShapingConfig) -> RewardGroup:
    index = _require_off_policy(group)
    rewards = list(group.rewards)
    rewards[index] = min(rewards[index], cfg.kappa * cfg.r_max)
    return group.with_rewards(rewards)


def anchor_offpolicy(group: RewardGroup, cfg: ShapingConfig) -> AdvantageVector:
    off_index = _require_off_policy(group)
    on_indices = group.on_policy_indices
    if len(on_indices) < 2:
        raise TooFewOnPolicy(
            "Anchoring needs at least two on-policy solutions, got %(n)s.",
            params={"n": len(on_indices)},
        )
    on_rewards = np.asarray([group.rewards[i] for i in on_indices], dtype=float)
    on_values, mean, std, degenerate = _normalize(on_rewards, cfg.sigma_floor)

    values = [0.0] * group.size
    for slot, index in enumerate(on_indices):
        values[index] = float(on_values[slot])
    values[off_index] = 0.0 if degenerate else cfg.lambda_off * float(on_values.max())
    return AdvantageVector(tuple(values), mean, std, Strategy.ANCHOR, degenerate)


def shape_reward(r: float, cfg: ShapingConfig) -> float:
    if not (0.0 <= r <= cfg.r_max):
        raise OutOfRange(
            "Shaping expects a reward in [0, %(r_max)s], got %(r)s.",
            params={"r_max": cfg.r_max, "r": r},
        )
    if r >= cfg.tau:
        return cfg.tau + cfg.alpha1 * math.log((r - cfg.tau) + 1.0)
    return cfg.tau - math.expm1(cfg.alpha2 * (cfg.tau - r)) / math.expm1(cfg.alpha2)


def shape_group(group: RewardGroup, cfg: ShapingConfig) -> RewardGroup:
    return group.with_rewards([shape_reward(r, cfg) for r in group.rewards])


def compute_advantages(
    group: RewardGroup, strategy: Strategy, cfg: ShapingConfig
) -> AdvantageVector:
    strategy = Strategy(strategy)
    if strategy is Strategy.NONE:
        return normalize_group(group, cfg, strategy)
    if strategy is Strategy.DOWNSCALE:
        return normalize_group(downscale_offpolicy(group, cfg), cfg, strategy)
    if strategy is Strategy.ANCHOR:
        return anchor_offpolicy(group, cfg)
    return normalize_group(shape_group(group, cfg), cfg, strategy)


def sample_skewness(values, sigma_floor: float = 1e-8) -> float:
    """Unadjusted Fisher-Pearson g1 = m3 / m2^(3/2) with population moments."""
    sample = np.asarray(values, dtype=float)
    if sample.size < 3:
        raise DegenerateSample(
            "Skewness needs at least three values, got %(n)s.", params={"n": sample.size}
        )
    centered = sample - sample.mean()
    m2 = float(np.mean(centered ** 2))
    if m2 < sigma_floor:
        raise DegenerateSample("Skewness is undefined for a constant sample.")
    m3 = float(np.mean(centered ** 3))
    return m3 / m2 ** 1.5
