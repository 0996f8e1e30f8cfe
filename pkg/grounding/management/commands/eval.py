import pandas as pd

from grounding.management.base import ExperimentCommand
from grounding.metrics import TIE_BREAK, VERY_GOOD_THRESHOLD, evaluate
from grounding.outputs import Task
from grounding.serializers import (
    GroundTruthRowSerializer,
    PredictionSerializer,
    read_jsonl,
    write_json,
)

REPORT_SCHEMA_VERSION = 1


class Command(ExperimentCommand):
    help = "Score predictions against ground truth (R1@IoU and mIoU, or mAP and HIT@1)."

    def add_arguments(self, parser):
        parser.add_argument("--preds", required=True, help="predictions JSON-lines")
        parser.add_argument("--gt", required=True, help="dataset JSON-lines holding the ground truth")
        parser.add_argument("--task", choices=[t.value for t in Task], default=Task.GROUNDING.value)
        parser.add_argument("--report", required=True, help="report JSON path; a CSV row is written next to it")
        parser.add_argument(
            "--threshold",
            type=float,
            default=VERY_GOOD_THRESHOLD,
            help="normalized saliency counted as a top label for HIT@1",
        )

    def run(self, **options):
        task = Task(options["task"])
        predictions = read_jsonl(options["preds"], PredictionSerializer)
        targets = {
            row.validated_data["instance_id"]: row.validated_data["gt"]
            for row in read_jsonl(options["gt"], GroundTruthRowSerializer)
        }
        metrics = evaluate(
            task,
            [p.grounding() for p in predictions],
            [p.highlight() for p in predictions],
            targets,
            options["threshold"],
        )

        report_path = write_json(
            options["report"],
            {
                "schema_version": REPORT_SCHEMA_VERSION,
                "task": task.value,
                "num_predictions": len(predictions),
                "tie_break": TIE_BREAK,
                "metrics": metrics,
            },
        )
        pd.DataFrame([metrics]).to_csv(report_path.with_suffix(".csv"), index=False)

        for name, value in metrics.items():
            self.stdout.write(f"{name}\t{value:.6f}")
