import copy
import json
import logging
from pathlib import Path

from grounding.exceptions import ConfigInvalid
from grounding.serializers import read_jsonl, write_json, write_jsonl

from .environment import generate_dataset
from .inference import evaluate_policy
from .models import TrainingRun
from .serializers import ExperimentConfigSerializer, PolicySerializer, TaskInstanceSerializer
from .sinks import JsonLinesSink, RegistrySink
from .trainer import train

logger = logging.getLogger(__name__)

STEP_LOG = "steps.jsonl"
SUMMARY = "summary.json"
POLICY = "policy.json"
HOLDOUT_SEED_OFFSET = 1

# command-line flag -> (config section, field)
OVERRIDES = {
    "strategy": ("train", "strategy"),
    "seed": ("train", "seed"),
    "steps": ("train", "steps_per_phase"),
    "g": ("train", "group_size"),
    "wf": ("train", "w_f"),
    "tau": ("shaping", "tau"),
    "alpha1": ("shaping", "alpha1"),
    "alpha2": ("shaping", "alpha2"),
    "lambda_off": ("shaping", "lambda_off"),
    "kappa": ("shaping", "kappa"),
    "out_dir": ("output", "out_dir"),
}


def parse_steps(value):
    """
    "N1,N2" sets both phases; a single "N" is split evenly, phase 1 taking
    the smaller half when N is odd.
    """
    parts = [p.strip() for p in str(value).split(",") if p.strip()]
    try:
        counts = [int(p) for p in parts]
    except ValueError:
        raise ConfigInvalid(
            "%(field)s: %(rule)s (got %(value)s)",
            params={"field": "steps_per_phase", "rule": "integer step counts", "value": value},
        )
    if len(counts) == 1:
        return [counts[0] // 2, counts[0] - counts[0] // 2]
    return counts


def read_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r") as fl:
            raw = json.load(fl)
    except OSError as exc:
        raise ConfigInvalid(f"config: can't read {path} ({exc.strerror})")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config: {path} is not JSON ({exc.msg})")
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"config: {path} must hold a JSON object")
    return raw


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Flag values win over the file; ``None`` means the flag wasn't given."""
    merged = copy.deepcopy(raw)
    for flag, value in overrides.items():
        if value is None or flag not in OVERRIDES:
            continue
        section, field = OVERRIDES[flag]
        if flag == "steps":
            value = parse_steps(value)
        merged.setdefault(section, {})[field] = value
    return merged


def validate_experiment(raw: dict):
    serializer = ExperimentConfigSerializer(data=raw)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data


def load_experiment(path=None, overrides=None):
    return validate_experiment(apply_overrides(read_config(path), overrides or {}))


def load_dataset(path) -> list:
    return [s.validated_data for s in read_jsonl(path, TaskInstanceSerializer)]


def save_dataset(path, dataset) -> Path:
    return write_jsonl(path, (TaskInstanceSerializer(inst).data for inst in dataset))


def build_dataset(dataset_cfg) -> list:
    if dataset_cfg.path:
        return load_dataset(dataset_cfg.path)
    return generate_dataset(
        dataset_cfg.num_instances,
        dataset_cfg.num_bins,
        dataset_cfg.obs_noise,
        dataset_cfg.task,
        dataset_cfg.seed,
        dataset_cfg.duration,
    )


def build_holdout(dataset_cfg, size: int) -> list:
    """Held-out instances drawn like the training set, from a seed of their own."""
    if dataset_cfg.path:
        raise ConfigInvalid("holdout: held-out instances are generated, the dataset is read from a file")
    if size < 1:
        raise ConfigInvalid(
            "%(field)s: %(rule)s (got %(value)s)",
            params={"field": "holdout", "rule": "holdout ≥ 1", "value": size},
        )
    return generate_dataset(
        size,
        dataset_cfg.num_bins,
        dataset_cfg.obs_noise,
        dataset_cfg.task,
        dataset_cfg.seed + HOLDOUT_SEED_OFFSET,
        dataset_cfg.duration,
    )


def load_policy(path):
    try:
        with open(path, "r") as fl:
            payload = json.load(fl)
    except OSError as exc:
        raise ConfigInvalid(f"policy: can't read {path} ({exc.strerror})")
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"policy: {path} is not JSON ({exc.msg})")
    serializer = PolicySerializer(data=payload)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data


def run_training(experiment, out_dir, dataset=None, register=False, holdout=None) -> dict:
    """
    Trains once and writes the step log, summary and final policy into
    ``out_dir``. With a ``holdout`` dataset the final policy is also scored
    on it. Returns the summary.
    """
    out_dir = Path(out_dir)
    if dataset is None:
        dataset = build_dataset(experiment.dataset)

    run = None
    if register:
        run = TrainingRun.objects.start_run(experiment.output.name, experiment.train)

    logger.info("training %s (seed %s) into %s", experiment.train.label, experiment.train.seed, out_dir)
    try:
        with JsonLinesSink(out_dir / STEP_LOG) as log_sink:
            sinks = [log_sink] if run is None else [log_sink, RegistrySink(run)]
            result = train(experiment.train, dataset, sinks)
    except Exception as exc:
        if run is not None:
            TrainingRun.objects.fail_run(run, exc)
        raise

    summary = dict(result.summary)
    summary["dataset"] = experiment.dataset.as_dict()
    if holdout is not None:
        summary["holdout"] = {"size": len(holdout), "metrics": evaluate_policy(result.policy, holdout)}
    write_json(out_dir / SUMMARY, summary)
    write_json(out_dir / POLICY, PolicySerializer(result.policy).data)
    if run is not None:
        TrainingRun.objects.finish_run(run, summary)
    return summary
