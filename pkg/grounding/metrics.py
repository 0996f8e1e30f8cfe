from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .exceptions import IndexOutOfRange, MissingGroundTruth, SchemaMismatch, UnrankedPredictions
from .outputs import Task
from .rewards import iou_reward
from .temporal import HighlightTarget, SaliencyTrack, TimeInterval, salient_segments

RECALL_THRESHOLDS = (0.3, 0.5, 0.7)
MAP_THRESHOLDS = (0.5, 0.75)
VERY_GOOD_THRESHOLD = 0.9
TIE_BREAK = "equal confidences ranked by earlier interval start"


@dataclass(frozen=True)
class GroundingPrediction:
    instance_id: int
    ranked_intervals: tuple
    confidences: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "ranked_intervals", tuple(self.ranked_intervals))
        if self.confidences is not None:
            object.__setattr__(self, "confidences", tuple(float(c) for c in self.confidences))
            if len(self.confidences) != len(self.ranked_intervals):
                raise UnrankedPredictions(
                    "Instance %(id)s has %(c)s confidences for %(n)s intervals.",
                    params={
                        "id": self.instance_id,
                        "c": len(self.confidences),
                        "n": len(self.ranked_intervals),
                    },
                )

    @property
    def top(self) -> TimeInterval:
        if not self.ranked_intervals:
            raise UnrankedPredictions(
                "Instance %(id)s has no ranked interval.", params={"id": self.instance_id}
            )
        return self.ranked_intervals[0]


@dataclass(frozen=True)
class HighlightPrediction:
    instance_id: int
    ranked_clips: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "ranked_clips", tuple((int(i), float(s)) for i, s in self.ranked_clips)
        )


def _lookup(gts: Mapping, instance_id):
    try:
        return gts[instance_id]
    except KeyError:
        raise MissingGroundTruth(f"No ground truth for instance {instance_id}.")


def top1_ious(preds: Sequence[GroundingPrediction], gts: Mapping) -> np.ndarray:
    return np.array([iou_reward(p.top, _lookup(gts, p.instance_id)) for p in preds], dtype=float)


def recall_at_1(preds: Sequence[GroundingPrediction], gts: Mapping, threshold: float) -> float:
    ious = top1_ious(preds, gts)
    if ious.size == 0:
        return 0.0
    return float(np.mean(ious >= threshold))


def mean_iou(preds: Sequence[GroundingPrediction], gts: Mapping) -> float:
    ious = top1_ious(preds, gts)
    if ious.size == 0:
        return 0.0
    return float(np.mean(ious))


def _confidence_order(pred: GroundingPrediction) -> list:
    intervals = list(pred.ranked_intervals)
    if pred.confidences is None:
        return intervals
    confidences = pred.confidences
    for rank in range(1, len(confidences)):
        if confidences[rank] > confidences[rank - 1]:
            raise UnrankedPredictions(
                "Instance %(id)s: confidence rises at rank %(rank)s.",
                params={"id": pred.instance_id, "rank": rank + 1},
            )
    order = sorted(
        range(len(intervals)), key=lambda k: (-confidences[k], intervals[k].start, k)
    )
    return [intervals[k] for k in order]


def average_precision(ranked: Sequence[TimeInterval], gt_segments: Sequence[TimeInterval], threshold: float) -> float:
    """
    All-point AP with greedy one-to-one matching: each prediction, in rank
    order, claims the unmatched segment it overlaps most (if IoU ≥ threshold).
    """
    if not gt_segments:
        return 0.0
    matched = [False] * len(gt_segments)
    true_positives = 0
    previous_recall = 0.0
    ap = 0.0
    for rank, interval in enumerate(ranked, start=1):
        best, best_iou = None, -1.0
        for k, segment in enumerate(gt_segments):
            if matched[k]:
                continue
            iou = iou_reward(interval, segment)
            if iou >= threshold and iou > best_iou:
                best, best_iou = k, iou
        if best is None:
            continue
        matched[best] = True
        true_positives += 1
        recall = true_positives / len(gt_segments)
        ap += (recall - previous_recall) * (true_positives / rank)
        previous_recall = recall
    return ap


def map_by_threshold(
    preds: Sequence[GroundingPrediction], gts: Mapping, thresholds=MAP_THRESHOLDS
) -> dict:
    """``gts`` maps instance id to a sequence of GT segments (or a single interval)."""
    table = {}
    for threshold in thresholds:
        aps = []
        for pred in preds:
            segments = _lookup(gts, pred.instance_id)
            if isinstance(segments, TimeInterval):
                segments = [segments]
            aps.append(average_precision(_confidence_order(pred), segments, threshold))
        table[threshold] = float(np.mean(aps)) if aps else 0.0
    return table


def mean_average_precision(
    preds: Sequence[GroundingPrediction], gts: Mapping, thresholds=MAP_THRESHOLDS
) -> float:
    table = map_by_threshold(preds, gts, thresholds)
    return float(np.mean(list(table.values()))) if table else 0.0


def hit_at_1(
    preds: Sequence[HighlightPrediction],
    gts: Mapping,
    very_good_threshold: float = VERY_GOOD_THRESHOLD,
) -> float:
    hits = []
    for pred in preds:
        track: SaliencyTrack = _lookup(gts, pred.instance_id)
        if not pred.ranked_clips:
            hits.append(False)
            continue
        top_clip = pred.ranked_clips[0][0]
        if not 0 <= top_clip < track.num_clips:
            raise IndexOutOfRange(
                "Instance %(id)s ranks clip %(clip)s, track has %(n)s clips.",
                params={"id": pred.instance_id, "clip": top_clip, "n": track.num_clips},
            )
        hits.append(track.scores[top_clip] >= very_good_threshold)
    return float(np.mean(hits)) if hits else 0.0


def grounding_report(preds, gts: Mapping, thresholds=RECALL_THRESHOLDS) -> dict:
    report = {f"R1@{t}": recall_at_1(preds, gts, t) for t in thresholds}
    report["mIoU"] = mean_iou(preds, gts)
    return report


def highlight_report(
    interval_preds,
    clip_preds,
    segment_gts: Mapping,
    track_gts: Mapping,
    very_good_threshold: float = VERY_GOOD_THRESHOLD,
) -> dict:
    table = map_by_threshold(interval_preds, segment_gts)
    report = {f"mAP@{t}": v for t, v in table.items()}
    report["mAP"] = float(np.mean(list(table.values())))
    report["HIT@1"] = hit_at_1(clip_preds, track_gts, very_good_threshold)
    return report


def evaluate(
    task: Task,
    interval_preds,
    clip_preds,
    targets: Mapping,
    very_good_threshold: float = VERY_GOOD_THRESHOLD,
) -> dict:
    """
    Full report for one task. ``targets`` maps instance id to a TimeInterval
    (grounding) or a HighlightTarget (highlight); highlight mAP runs against
    the contiguous salient segments of each target.
    """
    task = Task(task)
    expected = TimeInterval if task is Task.GROUNDING else HighlightTarget
    for instance_id, target in targets.items():
        if not isinstance(target, expected):
            raise SchemaMismatch(
                "Instance %(id)s has no %(task)s ground truth.",
                params={"id": instance_id, "task": task.value},
            )
    if task is Task.GROUNDING:
        return grounding_report(interval_preds, targets)
    segments = {
        instance_id: salient_segments(target.salient, target.track.clip_len)
        for instance_id, target in targets.items()
    }
    tracks = {instance_id: target.track for instance_id, target in targets.items()}
    return highlight_report(interval_preds, clip_preds, segments, tracks, very_good_threshold)
