import numpy as np
from django.db import models
from django.db.transaction import atomic
from django.core.exceptions import ObjectDoesNotExist, ValidationError


class TrainingRunManager(models.Manager):
    """
    Only these methods are supposed to be used to create or close a run;
    a run moves running -> finished or running -> failed, never back.
    """

    @atomic
    def start_run(self, name, config):
        return self.create(
            name=name,
            strategy=config.label,
            seed=config.seed,
            config=config.as_dict(),
            status="running",
        )

    def _running(self, run_id):
        try:
            run = self.get_queryset().select_for_update().get(pk=run_id)
        except self.model.DoesNotExist:
            raise ObjectDoesNotExist(f"No training run with id {run_id}")

        if run.status != "running":
            raise ValidationError(f"Run {run.name} is already {run.status}.")
        return run

    @atomic
    def finish_run(self, run, summary):
        run = self._running(run.pk)
        run.summary = summary
        run.status = "finished"
        run.save()
        return run

    @atomic
    def fail_run(self, run, error):
        run = self._running(run.pk)
        run.error = str(error)
        run.status = "failed"
        run.save()
        return run


class StepEntryManager(models.Manager):
    """
    Step entries are append-only and only accepted while their run is running.
    """

    @atomic
    def record(self, run, record):
        from .serializers import StepLogSerializer

        if run.status != "running":
            raise ValidationError(f"Run {run.name} is {run.status}, no more steps accepted.")

        return self.create(
            run=run,
            step=record.step,
            phase=record.phase.value,
            top1_mean=float(np.mean(record.top1_rewards)),
            skewness=record.skewness,
            kl=record.kl,
            objective=record.objective,
            payload=dict(StepLogSerializer(record).data),
        )
