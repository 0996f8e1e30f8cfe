from rest_framework import serializers
from rest_framework.settings import api_settings
from django.core.exceptions import ValidationError as DjangoValidationError

from grounding.exceptions import ConfigInvalid
from grounding.outputs import Task
from grounding.serializers import GroundTruthSerializer
from grounding.temporal import ShapingConfig

from .advantage import Strategy
from .config import DatasetConfig, ExperimentConfig, OutputConfig
from .environment import TaskInstance
from .policy import IntervalPolicy
from .trainer import GRPO_LABEL, SCHEMA_VERSION, SFT_LABEL, TrainConfig

STRATEGY_NAMES = (GRPO_LABEL, SFT_LABEL, *(s.value for s in Strategy))
SECTIONS = ("train", "shaping", "dataset", "output")


def field_errors(exc: ConfigInvalid) -> dict:
    """ConfigInvalid -> {field: [rule]} in DRF's error layout."""
    params = exc.params or {}
    field = params.get("field", api_settings.NON_FIELD_ERRORS_KEY)
    if "rule" in params:
        message = f"{params['rule']} (got {params.get('value')})"
    else:
        message = "; ".join(exc.messages)
    return {field: [message]}


###################
# Experiment config
###################


# ShapingConfig Serializer
class ShapingConfigSerializer(serializers.Serializer):
    tau = serializers.FloatField(default=0.8)
    alpha1 = serializers.FloatField(default=0.01)
    alpha2 = serializers.FloatField(default=1.0)
    lambda_off = serializers.FloatField(default=1.2)
    kappa = serializers.FloatField(default=0.8)
    r_max = serializers.FloatField(default=1.0)
    sigma_floor = serializers.FloatField(default=1e-8)

    def validate(self, data):
        try:
            return ShapingConfig(**data)
        except ConfigInvalid as exc:
            raise serializers.ValidationError(field_errors(exc))


# TrainConfig Serializer
class TrainConfigSerializer(serializers.Serializer):
    """
    Field-level shape only; the TrainConfig invariants are checked once the
    shaping section is known, in ExperimentConfigSerializer.validate.
    """

    group_size = serializers.IntegerField(default=4)
    clip_epsilon = serializers.FloatField(default=0.2)
    kl_beta = serializers.FloatField(default=0.04)
    learning_rate = serializers.FloatField(default=0.05)
    steps_per_phase = serializers.ListField(
        child=serializers.IntegerField(), default=[1000, 1000]
    )
    batch_size = serializers.IntegerField(default=8)
    strategy = serializers.ChoiceField(choices=STRATEGY_NAMES, default=Strategy.SHAPE.value)
    w_f = serializers.FloatField(default=0.5)
    seed = serializers.IntegerField(default=0)

    def validate(self, data):
        data = dict(data)
        name = data.pop("strategy")
        baseline = name in (GRPO_LABEL, SFT_LABEL)
        data["supervised"] = name == SFT_LABEL
        data["off_policy"] = not baseline
        data["strategy"] = Strategy.NONE if baseline else Strategy(name)
        return data


class DatasetConfigSerializer(serializers.Serializer):
    num_instances = serializers.IntegerField(min_value=1, default=64)
    num_bins = serializers.IntegerField(min_value=2, default=16)
    obs_noise = serializers.FloatField(min_value=0.0, default=0.0)
    task = serializers.ChoiceField(choices=[t.value for t in Task], default=Task.GROUNDING.value)
    seed = serializers.IntegerField(default=0)
    duration = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    # load instances from a JSON-lines file instead of generating them
    path = serializers.CharField(required=False, allow_null=True)

    def validate_duration(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("duration must be positive.")
        return value

    def validate(self, data):
        return DatasetConfig(**data)


class OutputConfigSerializer(serializers.Serializer):
    out_dir = serializers.CharField(required=False, allow_null=True)
    name = serializers.CharField(default="run")

    def validate(self, data):
        return OutputConfig(**data)


# ExperimentConfig Serializer
class ExperimentConfigSerializer(serializers.Serializer):
    train = TrainConfigSerializer()
    shaping = ShapingConfigSerializer()
    dataset = DatasetConfigSerializer()
    output = OutputConfigSerializer()

    def to_internal_value(self, data):
        # every section is optional; missing ones take their defaults
        if isinstance(data, dict):
            data = {**{section: {} for section in SECTIONS}, **data}
        return super().to_internal_value(data)

    def validate(self, data):
        try:
            train = TrainConfig(**data["train"], shaping=data["shaping"])
        except ConfigInvalid as exc:
            raise serializers.ValidationError({"train": field_errors(exc)})
        return ExperimentConfig(train=train, dataset=data["dataset"], output=data["output"])


###################
# Datasets and policies
###################


class TaskInstanceSerializer(serializers.Serializer):
    instance_id = serializers.IntegerField()
    duration = serializers.FloatField()
    observation = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    gt = GroundTruthSerializer()

    def validate(self, data):
        try:
            return TaskInstance(
                data["instance_id"], data["duration"], data["observation"], data["gt"]
            )
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)

    def to_representation(self, instance):
        return {
            "instance_id": instance.instance_id,
            "duration": instance.duration,
            "observation": instance.observation.tolist(),
            "gt": GroundTruthSerializer(instance.target).data,
        }


class _MatrixField(serializers.ListField):
    child = serializers.ListField(child=serializers.FloatField())

    def to_representation(self, data):
        return None if data is None else data.tolist()


class PolicySerializer(serializers.Serializer):
    num_bins = serializers.IntegerField(min_value=1)
    weights = _MatrixField()
    format_weights = _MatrixField()
    ref_weights = _MatrixField(required=False, allow_null=True)
    ref_format_weights = _MatrixField(required=False, allow_null=True)

    def validate(self, data):
        try:
            return IntervalPolicy(
                data["num_bins"],
                data["weights"],
                data["format_weights"],
                data.get("ref_weights"),
                data.get("ref_format_weights"),
            )
        except (DjangoValidationError, ValueError) as exc:
            messages = exc.messages if isinstance(exc, DjangoValidationError) else [str(exc)]
            raise serializers.ValidationError(messages)


###################
# Run log
###################


# StepRecord Serializer
class StepLogSerializer(serializers.Serializer):
    """One line of the run log; field names are stable across versions."""

    schema_version = serializers.SerializerMethodField()
    step = serializers.IntegerField()
    phase = serializers.SerializerMethodField()
    strategy = serializers.CharField()
    top1_rewards = serializers.ListField(child=serializers.FloatField())
    skewness = serializers.FloatField(allow_null=True)
    kl = serializers.FloatField()
    objective = serializers.FloatField()

    def get_schema_version(self, record):
        return SCHEMA_VERSION

    def get_phase(self, record):
        return record.phase.value
