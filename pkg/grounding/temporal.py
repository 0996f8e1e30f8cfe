from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Any, Iterable, Optional, Sequence

from .exceptions import (
    ConfigInvalid,
    InvalidRewardGroup,
    NegativeTime,
    OrderViolation,
    OutOfRange,
)

# raw highlight annotations use a 0-4 scale
RAW_SALIENCY_SCALE = 4.0
SALIENT_THRESHOLD = 0.5


class Source(str, enum.Enum):
    ON_POLICY = "on_policy"
    OFF_POLICY = "off_policy"


@dataclass(frozen=True)
class TimeInterval:
    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise OutOfRange(
                "Interval bounds must be finite, got [%(start)s, %(end)s].",
                params={"start": self.start, "end": self.end},
            )
        if self.start < 0 or self.end < 0:
            raise NegativeTime(
                "Interval bounds can't be negative, got [%(start)s, %(end)s].",
                params={"start": self.start, "end": self.end},
            )
        if self.start > self.end:
            raise OrderViolation(
                "Interval start %(start)s is after its end %(end)s.",
                params={"start": self.start, "end": self.end},
            )

    @property
    def width(self) -> float:
        return self.end - self.start

    def as_list(self) -> list:
        return [self.start, self.end]


def new_interval(start: float, end: float) -> TimeInterval:
    """Reversed bounds are rejected, never swapped."""
    return TimeInterval(float(start), float(end))


@dataclass(frozen=True)
class SaliencyTrack:
    clip_len: float
    scores: tuple

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if not (math.isfinite(self.clip_len) and self.clip_len > 0):
            raise OutOfRange(
                "Clip length must be positive, got %(clip_len)s.",
                params={"clip_len": self.clip_len},
            )
        if not self.scores:
            raise OutOfRange("A saliency track needs at least one clip.")
        for score in self.scores:
            if not (0.0 <= score <= 1.0):
                raise OutOfRange(
                    "Saliency scores are normalized to [0, 1], got %(score)s.",
                    params={"score": score},
                )

    @classmethod
    def from_raw(cls, clip_len: float, raw_scores: Iterable[float]) -> "SaliencyTrack":
        return cls(clip_len, tuple(s / RAW_SALIENCY_SCALE for s in raw_scores))

    @property
    def num_clips(self) -> int:
        return len(self.scores)

    @property
    def duration(self) -> float:
        return self.clip_len * self.num_clips


def derive_salient_clips(
    track: SaliencyTrack, threshold: float = SALIENT_THRESHOLD
) -> frozenset:
    return frozenset(i for i, s in enumerate(track.scores) if s >= threshold)


def salient_segments(clips: Iterable[int], clip_len: float) -> list:
    """
    Collapses a clip-index set into contiguous runs, returned as intervals in
    seconds ordered by start.
    """
    ordered = sorted(set(clips))
    segments = []
    run_start = None
    previous = None
    for index in ordered:
        if run_start is None:
            run_start = index
        elif index != previous + 1:
            segments.append(new_interval(run_start * clip_len, (previous + 1) * clip_len))
            run_start = index
        previous = index
    if run_start is not None:
        segments.append(new_interval(run_start * clip_len, (previous + 1) * clip_len))
    return segments


@dataclass(frozen=True)
class HighlightTarget:
    track: SaliencyTrack
    salient: frozenset = None

    def __post_init__(self):
        if self.salient is None:
            object.__setattr__(self, "salient", derive_salient_clips(self.track))
        else:
            object.__setattr__(self, "salient", frozenset(self.salient))
        for index in self.salient:
            if not 0 <= index < self.track.num_clips:
                raise OutOfRange(
                    "Salient clip %(index)s is outside the track.",
                    params={"index": index},
                )


@dataclass(frozen=True)
class Solution:
    raw_text: str
    parsed: Optional[Any] = None
    source: Source = Source.ON_POLICY

    def __post_init__(self):
        # ground truth is always well-formed
        if self.source is Source.OFF_POLICY and self.parsed is None:
            raise InvalidRewardGroup("An off-policy solution must carry a parsed payload.")


@dataclass(frozen=True)
class RewardGroup:
    rewards: tuple
    sources: tuple

    def __post_init__(self):
        object.__setattr__(self, "rewards", tuple(float(r) for r in self.rewards))
        object.__setattr__(self, "sources", tuple(Source(s) for s in self.sources))
        if len(self.rewards) != len(self.sources):
            raise InvalidRewardGroup(
                "Got %(r)s rewards for %(s)s sources.",
                params={"r": len(self.rewards), "s": len(self.sources)},
            )
        if len(self.rewards) < 2:
            raise InvalidRewardGroup("A reward group needs at least two solutions.")
        if sum(1 for s in self.sources if s is Source.OFF_POLICY) > 1:
            raise InvalidRewardGroup("A reward group holds at most one off-policy solution.")

    @classmethod
    def mixed(cls, on_policy: Sequence[float], off_policy: Optional[float] = None):
        """On-policy rewards first, the off-policy reward (if any) last."""
        rewards = list(on_policy)
        sources = [Source.ON_POLICY] * len(rewards)
        if off_policy is not None:
            rewards.append(off_policy)
            sources.append(Source.OFF_POLICY)
        return cls(tuple(rewards), tuple(sources))

    @property
    def size(self) -> int:
        return len(self.rewards)

    @property
    def off_policy_index(self) -> Optional[int]:
        for index, source in enumerate(self.sources):
            if source is Source.OFF_POLICY:
                return index
        return None

    @property
    def on_policy_indices(self) -> list:
        return [i for i, s in enumerate(self.sources) if s is Source.ON_POLICY]

    def with_rewards(self, rewards: Sequence[float]) -> "RewardGroup":
        return replace(self, rewards=tuple(rewards))


@dataclass(frozen=True)
class ShapingConfig:
    tau: float = 0.8
    alpha1: float = 0.01
    alpha2: float = 1.0
    lambda_off: float = 1.2
    kappa: float = 0.8
    r_max: float = 1.0
    sigma_floor: float = 1e-8

    def __post_init__(self):
        checks = (
            ("tau", 0 < self.tau < self.r_max, "0 < tau < r_max"),
            ("alpha1", self.alpha1 > 0, "alpha1 > 0"),
            ("alpha2", self.alpha2 > 0, "alpha2 > 0"),
            ("lambda_off", self.lambda_off > 0, "lambda_off > 0"),
            ("kappa", 0 < self.kappa <= 1, "0 < kappa ≤ 1"),
            ("sigma_floor", self.sigma_floor > 0, "sigma_floor > 0"),
        )
        for name, ok, rule in checks:
            if not ok:
                raise ConfigInvalid(
                    "%(field)s: %(rule)s (got %(value)s)",
                    params={"field": name, "rule": rule, "value": getattr(self, name)},
                )
