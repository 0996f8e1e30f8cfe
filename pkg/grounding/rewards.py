from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .exceptions import ClipLenMismatch, LengthMismatch
from .outputs import HighlightPayload, Schema, Task, extract_answer, parse_output
from .temporal import HighlightTarget, SaliencyTrack, TimeInterval, derive_salient_clips

LAMBDA_REC = 0.6
LAMBDA_SCORE = 0.4
F_BETA = 2.0
DEFAULT_FORMAT_WEIGHT = 0.5


@dataclass(frozen=True)
class RewardBreakdown:
    task_reward: float
    format_reward: int
    total: float
    components: dict = field(default_factory=dict)


def iou_reward(pred: TimeInterval, gt: TimeInterval) -> float:
    intersection = max(0.0, min(pred.end, gt.end) - max(pred.start, gt.start))
    union = max(pred.end, gt.end) - min(pred.start, gt.start)
    if union <= 0.0:
        return 1.0 if pred == gt else 0.0
    return intersection / union


def f2_score(pred_clips, gt_clips) -> float:
    pred_clips, gt_clips = set(pred_clips), set(gt_clips)
    if not pred_clips or not gt_clips:
        return 0.0
    hits = len(pred_clips & gt_clips)
    if hits == 0:
        return 0.0
    precision = hits / len(pred_clips)
    recall = hits / len(gt_clips)
    beta2 = F_BETA * F_BETA
    return (1 + beta2) * precision * recall / (beta2 * precision + recall)


def wmse(pred_scores, gt_scores) -> float:
    pred = np.asarray(pred_scores, dtype=float)
    gt = np.asarray(gt_scores, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 1 or pred.size == 0:
        raise LengthMismatch(
            "Score sequences must be aligned and non-empty, got %(p)s and %(g)s.",
            params={"p": pred.shape, "g": gt.shape},
        )
    weights = gt * gt
    if weights.sum() == 0.0:
        # all-zero ground truth: plain MSE
        weights = np.ones_like(gt)
    residuals = (pred - gt) ** 2
    return float(np.sum(weights * residuals) / np.sum(weights))


def timestamp_matching_reward(
    pred_track: SaliencyTrack,
    gt_track: SaliencyTrack,
    pred_clips=None,
    gt_clips=None,
) -> float:
    if pred_track.num_clips != gt_track.num_clips:
        raise LengthMismatch(
            "Predicted track has %(p)s clips, ground truth has %(g)s.",
            params={"p": pred_track.num_clips, "g": gt_track.num_clips},
        )
    if not math.isclose(pred_track.clip_len, gt_track.clip_len, rel_tol=1e-9):
        raise ClipLenMismatch(
            "Clip lengths differ: %(p)s vs %(g)s.",
            params={"p": pred_track.clip_len, "g": gt_track.clip_len},
        )
    if pred_clips is None:
        pred_clips = derive_salient_clips(pred_track)
    if gt_clips is None:
        gt_clips = derive_salient_clips(gt_track)

    pred = np.asarray(pred_track.scores)
    gt = np.asarray(gt_track.scores)
    annotated = gt > 0
    if annotated.any():
        score_error = wmse(pred[annotated], gt[annotated])
    else:
        score_error = wmse(pred, gt)
    return LAMBDA_REC * f2_score(pred_clips, gt_clips) + LAMBDA_SCORE * (1.0 / (1.0 + score_error))


def format_reward(raw_text, schema: Schema, task: Task = Task.GROUNDING) -> int:
    return 1 if parse_output(raw_text, schema, task).well_formed else 0


def combine_rewards(
    task: float, format: int, phase: Schema, w_f: float = DEFAULT_FORMAT_WEIGHT, components=None
) -> RewardBreakdown:
    if Schema(phase) is Schema.ANSWER_ONLY:
        total = task
    else:
        total = (task + w_f * format) / (1.0 + w_f)
    return RewardBreakdown(
        task_reward=task, format_reward=format, total=total, components=dict(components or {})
    )


Target = Union[TimeInterval, HighlightTarget]


def _task_reward(payload, target: Target) -> tuple:
    if payload is None:
        return 0.0, {}
    if isinstance(target, TimeInterval):
        if not isinstance(payload, TimeInterval):
            return 0.0, {}
        iou = iou_reward(payload, target)
        return iou, {"iou": iou}

    if not isinstance(payload, HighlightPayload):
        return 0.0, {}
    track = target.track
    if any(not 0 <= index < track.num_clips for index in payload.indices):
        return 0.0, {}
    pred_track = payload.to_track(track.num_clips, track.clip_len)
    pred_clips = payload.salient_clips()
    f2 = f2_score(pred_clips, target.salient)
    annotated = np.asarray(track.scores) > 0
    pred, gt = np.asarray(pred_track.scores), np.asarray(track.scores)
    score_error = wmse(pred[annotated], gt[annotated]) if annotated.any() else wmse(pred, gt)
    reward = timestamp_matching_reward(pred_track, track, pred_clips, target.salient)
    return reward, {"f2": f2, "wmse": score_error}


def score_solution(
    raw_text: str,
    target: Target,
    task: Task,
    phase: Schema,
    w_f: float = DEFAULT_FORMAT_WEIGHT,
    payload: Optional[object] = None,
) -> RewardBreakdown:
    """
    Full reward of one solution string: the task reward is judged on the
    extracted answer, the format reward on the active schema's structure.
    """
    if payload is None:
        payload = extract_answer(raw_text, phase, task)
    task_reward, components = _task_reward(payload, target)
    fmt = format_reward(raw_text, phase, task)
    return combine_rewards(task_reward, fmt, phase, w_f, components)
