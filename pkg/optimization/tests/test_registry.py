import pytest
from django.core.exceptions import ValidationError

from grounding.outputs import Schema
from optimization.experiment import STEP_LOG, run_training, validate_experiment
from optimization.models import StepEntry, TrainingRun
from optimization.sinks import RegistrySink
from optimization.trainer import StepRecord, TrainConfig

pytestmark = pytest.mark.django_db


def _record(step):
    return StepRecord(
        step=step,
        phase=Schema.ANSWER_ONLY,
        strategy="shape",
        rewards=[[0.2, 1.0]],
        advantages=[[-1.0, 1.0]],
        top1_rewards=[0.2, 0.6],
        skewness=0.1,
        kl=0.0,
        objective=0.5,
    )


def test_run_lifecycle():
    run = TrainingRun.objects.start_run("smoke", TrainConfig(seed=3))
    assert (run.status, run.strategy, run.seed) == ("running", "shape", 3)
    assert run.config["group_size"] == 4

    sink = RegistrySink(run)
    sink.write(_record(0))
    sink.write(_record(1))
    entry = run.steps.first()
    assert entry.top1_mean == pytest.approx(0.4)
    assert entry.payload["schema_version"] == 1

    run = TrainingRun.objects.finish_run(run, {"steps": 2})
    assert run.status == "finished"
    assert list(TrainingRun.objects.filter(status="finished", name="smoke")) == [run]

    with pytest.raises(ValidationError):
        TrainingRun.objects.finish_run(run, {})
    with pytest.raises(ValidationError):
        StepEntry.objects.record(run, _record(2))


def test_failed_run_keeps_error():
    run = TrainingRun.objects.start_run("broken", TrainConfig())
    run = TrainingRun.objects.fail_run(run, RuntimeError("diverged"))
    assert run.status == "failed"
    assert run.error == "diverged"
    assert not TrainingRun.objects.filter(status="finished").exists()


def test_registered_training(tmp_path):
    experiment = validate_experiment(
        {
            "train": {"steps_per_phase": [2, 1], "batch_size": 2, "strategy": "grpo"},
            "dataset": {"num_instances": 4, "num_bins": 4},
            "output": {"name": "registered"},
        }
    )
    summary = run_training(experiment, tmp_path, register=True)

    run = TrainingRun.objects.get(name="registered")
    assert run.status == "finished"
    assert run.strategy == "grpo"
    assert run.summary["steps"] == summary["steps"] == 3
    assert [e.step for e in run.steps.all()] == [0, 1, 2]
    assert [e.phase for e in run.steps.all()] == ["answer_only", "answer_only", "think_answer"]
    assert len((tmp_path / STEP_LOG).read_text().splitlines()) == 3


def test_supervised_run_label():
    run = TrainingRun.objects.start_run("baseline", TrainConfig(supervised=True))
    assert run.strategy == "sft"
    assert run.strategy in dict(TrainingRun._meta.get_field("strategy").choices)
