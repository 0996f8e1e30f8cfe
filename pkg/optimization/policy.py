"""
Linear-softmax policy over bin-pair interval actions, with a second head
picking the output template. Both heads are linear in the observation.
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from grounding.exceptions import DimensionMismatch, IndexOutOfRange, MissingReference

NUM_TEMPLATES = 4


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.sum(np.exp(shifted)))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


class IntervalPolicy:
    def __init__(
        self,
        num_bins: int,
        weights: np.ndarray,
        format_weights: np.ndarray,
        ref_weights: Optional[np.ndarray] = None,
        ref_format_weights: Optional[np.ndarray] = None,
    ):
        if num_bins < 1:
            raise DimensionMismatch("A policy needs at least one bin.")
        self.num_bins = int(num_bins)
        self.weights = np.array(weights, dtype=float)
        self.format_weights = np.array(format_weights, dtype=float)
        expected = self.num_bins * (self.num_bins + 1) // 2
        if self.weights.ndim != 2 or self.weights.shape[1] != expected:
            raise DimensionMismatch(
                "Interval head needs %(a)s action columns for %(n)s bins, got shape %(shape)s.",
                params={"a": expected, "n": self.num_bins, "shape": self.weights.shape},
            )
        if self.format_weights.ndim != 2 or self.format_weights.shape[0] != self.weights.shape[0]:
            raise DimensionMismatch(
                "Format head shape %(shape)s doesn't match feature_dim %(d)s.",
                params={"shape": self.format_weights.shape, "d": self.weights.shape[0]},
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.format_weights))):
            raise DimensionMismatch("Policy weights must be finite.")
        self.ref_weights = None if ref_weights is None else _frozen(ref_weights)
        self.ref_format_weights = (
            None if ref_format_weights is None else _frozen(ref_format_weights)
        )
        self._rows, self._cols = np.triu_indices(self.num_bins)

    @classmethod
    def zeros(cls, num_bins: int, feature_dim: Optional[int] = None, num_templates: int = NUM_TEMPLATES):
        feature_dim = 2 * num_bins if feature_dim is None else feature_dim
        num_actions = num_bins * (num_bins + 1) // 2
        return cls(
            num_bins,
            np.zeros((feature_dim, num_actions)),
            np.zeros((feature_dim, num_templates)),
        )

    @classmethod
    def random(cls, num_bins: int, rng: np.random.Generator, scale: float = 1.0,
               feature_dim: Optional[int] = None, num_templates: int = NUM_TEMPLATES):
        policy = cls.zeros(num_bins, feature_dim, num_templates)
        policy.weights = rng.normal(0.0, scale, policy.weights.shape)
        policy.format_weights = rng.normal(0.0, scale, policy.format_weights.shape)
        return policy

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def num_actions(self) -> int:
        return self.weights.shape[1]

    @property
    def num_templates(self) -> int:
        return self.format_weights.shape[1]

    @property
    def has_reference(self) -> bool:
        return self.ref_weights is not None and self.ref_format_weights is not None

    def bins_of(self, action: int) -> Tuple[int, int]:
        self._check_action(action, 0)
        return int(self._rows[action]), int(self._cols[action])

    def action_of(self, start_bin: int, end_bin: int) -> int:
        n = self.num_bins
        if not 0 <= start_bin <= end_bin < n:
            raise IndexOutOfRange(
                "Bin pair (%(i)s, %(j)s) is not a valid action for %(n)s bins.",
                params={"i": start_bin, "j": end_bin, "n": n},
            )
        # row-major over the upper triangle
        return start_bin * n - start_bin * (start_bin - 1) // 2 + (end_bin - start_bin)

    def snapshot_reference(self):
        self.ref_weights = _frozen(self.weights)
        self.ref_format_weights = _frozen(self.format_weights)

    def copy(self) -> "IntervalPolicy":
        return IntervalPolicy(
            self.num_bins,
            self.weights.copy(),
            self.format_weights.copy(),
            self.ref_weights,
            self.ref_format_weights,
        )

    def reference(self) -> "IntervalPolicy":
        if not self.has_reference:
            raise MissingReference("No reference snapshot has been taken.")
        return IntervalPolicy(self.num_bins, self.ref_weights, self.ref_format_weights)

    def _check_observation(self, observation) -> np.ndarray:
        observation = np.asarray(observation, dtype=float)
        if observation.shape != (self.feature_dim,):
            raise DimensionMismatch(
                "Observation has shape %(shape)s, policy expects (%(d)s,).",
                params={"shape": observation.shape, "d": self.feature_dim},
            )
        return observation

    def _check_action(self, action: int, template: int):
        if not 0 <= action < self.num_actions:
            raise IndexOutOfRange(
                "Interval action %(a)s out of range [0, %(n)s).",
                params={"a": action, "n": self.num_actions},
            )
        if not 0 <= template < self.num_templates:
            raise IndexOutOfRange(
                "Template %(t)s out of range [0, %(n)s).",
                params={"t": template, "n": self.num_templates},
            )


def _frozen(array) -> np.ndarray:
    frozen = np.array(array, dtype=float)
    frozen.setflags(write=False)
    return frozen


def action_probs(policy: IntervalPolicy, observation) -> np.ndarray:
    observation = policy._check_observation(observation)
    return _softmax(observation @ policy.weights)


def format_probs(policy: IntervalPolicy, observation) -> np.ndarray:
    observation = policy._check_observation(observation)
    return _softmax(observation @ policy.format_weights)


def log_prob(policy: IntervalPolicy, observation, action: Tuple[int, int]) -> float:
    interval_action, template = action
    policy._check_action(interval_action, template)
    observation = policy._check_observation(observation)
    return float(
        _log_softmax(observation @ policy.weights)[interval_action]
        + _log_softmax(observation @ policy.format_weights)[template]
    )


def grad_log_prob(policy: IntervalPolicy, observation, action: Tuple[int, int]):
    """Score function: observation ⊗ (one_hot(action) - probs), per head."""
    interval_action, template = action
    policy._check_action(interval_action, template)
    observation = policy._check_observation(observation)

    interval_dir = -action_probs(policy, observation)
    interval_dir[interval_action] += 1.0
    format_dir = -format_probs(policy, observation)
    format_dir[template] += 1.0
    return np.outer(observation, interval_dir), np.outer(observation, format_dir)


def _head_kl(logits: np.ndarray, ref_logits: np.ndarray):
    log_p = _log_softmax(logits)
    log_ref = _log_softmax(ref_logits)
    p = np.exp(log_p)
    log_ratio = log_p - log_ref
    kl = float(np.sum(p * log_ratio))
    # d KL / d logits
    return max(kl, 0.0), p * (log_ratio - kl)


def kl_to_ref(policy: IntervalPolicy, observation) -> float:
    return kl_and_grad(policy, observation)[0]


def kl_and_grad(policy: IntervalPolicy, observation):
    """Exact KL(π_θ ‖ π_ref) summed over both heads, with its weight gradients."""
    if not policy.has_reference:
        raise MissingReference("No reference snapshot has been taken.")
    observation = policy._check_observation(observation)
    kl_interval, dir_interval = _head_kl(
        observation @ policy.weights, observation @ policy.ref_weights
    )
    kl_format, dir_format = _head_kl(
        observation @ policy.format_weights, observation @ policy.ref_format_weights
    )
    return (
        kl_interval + kl_format,
        (np.outer(observation, dir_interval), np.outer(observation, dir_format)),
    )
