import json
from pathlib import Path

from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from .metrics import GroundingPrediction, HighlightPrediction
from .temporal import HighlightTarget, SaliencyTrack, new_interval


###################
# Custom fields
###################


class IntervalField(serializers.Field):
    """[start, end] in seconds <-> TimeInterval"""

    default_error_messages = {
        "shape": "Expected a [start, end] pair of numbers.",
    }

    def to_internal_value(self, data):
        if not isinstance(data, (list, tuple)) or len(data) != 2:
            self.fail("shape")
        try:
            return new_interval(float(data[0]), float(data[1]))
        except (TypeError, ValueError):
            self.fail("shape")
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)

    def to_representation(self, value):
        return [value.start, value.end]


class ClipScoreField(serializers.Field):
    """[clip_index, score] pair"""

    default_error_messages = {
        "shape": "Expected a [clip_index, score] pair.",
    }

    def to_internal_value(self, data):
        if not isinstance(data, (list, tuple)) or len(data) != 2:
            self.fail("shape")
        try:
            index, score = int(data[0]), float(data[1])
        except (TypeError, ValueError):
            self.fail("shape")
        if index < 0:
            raise serializers.ValidationError("Clip indices can't be negative.")
        return (index, score)

    def to_representation(self, value):
        return [int(value[0]), float(value[1])]


###################
# Ground truth
###################


class SaliencyTrackSerializer(serializers.Serializer):
    clip_len = serializers.FloatField(min_value=0.0)
    scores = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0), allow_empty=False
    )
    salient = serializers.ListField(
        child=serializers.IntegerField(min_value=0), required=False
    )

    def validate(self, data):
        try:
            track = SaliencyTrack(data["clip_len"], tuple(data["scores"]))
            return HighlightTarget(track, data.get("salient"))
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)

    def to_representation(self, target):
        return {
            "clip_len": target.track.clip_len,
            "scores": list(target.track.scores),
            "salient": sorted(target.salient),
        }


class GroundTruthSerializer(serializers.Serializer):
    """Exactly one of ``interval`` or ``highlight``."""

    interval = IntervalField(required=False)
    highlight = SaliencyTrackSerializer(required=False)

    def validate(self, data):
        if ("interval" in data) == ("highlight" in data):
            raise serializers.ValidationError(
                "Ground truth holds exactly one of interval or highlight."
            )
        return data.get("interval") or data.get("highlight")

    def to_representation(self, target):
        if isinstance(target, HighlightTarget):
            return {"highlight": SaliencyTrackSerializer(target).data}
        return {"interval": IntervalField().to_representation(target)}


class GroundTruthRowSerializer(serializers.Serializer):
    """A dataset line read for evaluation; everything but instance_id and gt is ignored."""

    instance_id = serializers.IntegerField()
    gt = GroundTruthSerializer()


###################
# Predictions
###################


class PredictionSerializer(serializers.Serializer):
    instance_id = serializers.IntegerField()
    ranked_intervals = serializers.ListField(child=IntervalField(), required=False)
    confidences = serializers.ListField(child=serializers.FloatField(), required=False)
    ranked_clips = serializers.ListField(child=ClipScoreField(), required=False)
    raw_text = serializers.CharField(required=False, allow_blank=True)

    def validate(self, data):
        if "ranked_intervals" not in data and "ranked_clips" not in data:
            raise serializers.ValidationError(
                "A prediction needs ranked_intervals or ranked_clips."
            )
        confidences = data.get("confidences")
        if confidences is not None and len(confidences) != len(data.get("ranked_intervals", [])):
            raise serializers.ValidationError(
                {"confidences": "One confidence per ranked interval."}
            )
        return data

    def grounding(self) -> GroundingPrediction:
        data = self.validated_data
        confidences = data.get("confidences")
        return GroundingPrediction(
            data["instance_id"],
            tuple(data.get("ranked_intervals", ())),
            tuple(confidences) if confidences is not None else None,
        )

    def highlight(self) -> HighlightPrediction:
        data = self.validated_data
        return HighlightPrediction(data["instance_id"], tuple(data.get("ranked_clips", ())))


###################
# JSON-lines
###################


class JsonLinesError(serializers.ValidationError):
    pass


def read_jsonl(path, serializer_class, **kwargs):
    """
    Validates every line of a JSON-lines file with ``serializer_class`` and
    returns the bound serializers; errors name the offending line.
    """
    bound = []
    with open(path, "r") as fl:
        for number, line in enumerate(fl, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JsonLinesError(f"{path}:{number}: not JSON ({exc.msg}).")
            serializer = serializer_class(data=payload, **kwargs)
            if not serializer.is_valid():
                raise JsonLinesError(f"{path}:{number}: {serializer.errors}")
            bound.append(serializer)
    return bound


def write_jsonl(path, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fl:
        for row in rows:
            fl.write(json.dumps(row, sort_keys=True))
            fl.write("\n")
    return path


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fl:
        json.dump(payload, fl, indent=2, sort_keys=True)
        fl.write("\n")
    return path
