from django.db import models

from .managers import StepEntryManager, TrainingRunManager


class TrackingModel(models.Model):
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True


RUN_STATUS_CHOICES = (
    ("running", "running"),
    ("finished", "finished"),
    ("failed", "failed"),
)

STRATEGY_CHOICES = (
    ("grpo", "grpo"),  # on-policy only, no ground-truth injection
    ("sft", "sft"),  # supervised on the ground truth
    ("none", "none"),
    ("downscale", "downscale"),
    ("anchor", "anchor"),
    ("shape", "shape"),
)

PHASE_CHOICES = (
    ("answer_only", "answer_only"),
    ("think_answer", "think_answer"),
)


class TrainingRun(TrackingModel):
    id = models.AutoField(primary_key=True)

    name = models.CharField(max_length=100, blank=False, null=False)

    strategy = models.CharField(max_length=10, choices=STRATEGY_CHOICES)

    seed = models.IntegerField(default=0)

    # echoed TrainConfig, see TrainConfig.as_dict
    config = models.JSONField()

    # null until the run finishes
    summary = models.JSONField(blank=True, null=True)

    status = models.CharField(
        max_length=10, choices=RUN_STATUS_CHOICES, default="running", db_index=True
    )

    error = models.TextField(blank=True, default="")

    objects = TrainingRunManager()

    class Meta:
        verbose_name = "Training Run"

    def __str__(self):
        return f"[{self.name}] {self.strategy}/seed {self.seed} ({self.status})"


class StepEntry(TrackingModel):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="steps")

    step = models.PositiveIntegerField()

    phase = models.CharField(max_length=12, choices=PHASE_CHOICES)

    top1_mean = models.FloatField()

    skewness = models.FloatField(blank=True, null=True)

    kl = models.FloatField()

    objective = models.FloatField()

    payload = models.JSONField()

    objects = StepEntryManager()

    class Meta:
        verbose_name = "Step Entry"
        verbose_name_plural = "Step Entries"
        ordering = ["step"]
        unique_together = (
            "run",
            "step",
        )

    def __str__(self):
        return f"[{self.run.name}] step {self.step}"
