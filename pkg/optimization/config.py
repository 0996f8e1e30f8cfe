from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from django.conf import settings

from grounding.outputs import Task

from .advantage import Strategy
from .trainer import GRPO_LABEL, SFT_LABEL, TrainConfig


@dataclass(frozen=True)
class DatasetConfig:
    num_instances: int = 64
    num_bins: int = 16
    obs_noise: float = 0.0
    task: Task = Task.GROUNDING
    seed: int = 0
    duration: Optional[float] = None
    path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))

    def as_dict(self) -> dict:
        return {
            "num_instances": self.num_instances,
            "num_bins": self.num_bins,
            "obs_noise": self.obs_noise,
            "task": self.task.value,
            "seed": self.seed,
            "duration": self.duration,
            "path": self.path,
        }


@dataclass(frozen=True)
class OutputConfig:
    out_dir: Optional[str] = None
    name: str = "run"

    @property
    def directory(self) -> Path:
        return Path(self.out_dir) if self.out_dir else Path(settings.OUT_DIR)


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig
    dataset: DatasetConfig
    output: OutputConfig

    def with_run(self, strategy_label: str, seed: int) -> "ExperimentConfig":
        """Same experiment under another strategy name and training seed."""
        if strategy_label in (GRPO_LABEL, SFT_LABEL):
            train = replace(
                self.train,
                strategy=Strategy.NONE,
                off_policy=False,
                supervised=strategy_label == SFT_LABEL,
                seed=seed,
            )
        else:
            train = replace(
                self.train, strategy=Strategy(strategy_label), off_policy=True, supervised=False, seed=seed
            )
        return replace(self, train=train)

    def with_train_size(self, size: int) -> "ExperimentConfig":
        """Generated datasets are prefix-stable, so the first ``size`` instances are this dataset."""
        return replace(self, dataset=replace(self.dataset, num_instances=size))

    def as_dict(self) -> dict:
        return {
            "train": self.train.as_dict(),
            "dataset": self.dataset.as_dict(),
            "output": {"out_dir": self.output.out_dir, "name": self.output.name},
        }
