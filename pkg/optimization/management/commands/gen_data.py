from django.conf import settings

from grounding.management.base import ExperimentCommand
from optimization.experiment import build_dataset, save_dataset
from optimization.serializers import DatasetConfigSerializer


class Command(ExperimentCommand):
    help = "Generate a synthetic grounding or highlight dataset as JSON-lines."

    def add_arguments(self, parser):
        parser.add_argument("--num-instances", dest="num_instances", type=int)
        parser.add_argument("--num-bins", dest="num_bins", type=int)
        parser.add_argument("--noise", dest="obs_noise", type=float)
        parser.add_argument("--task", choices=["grounding", "highlight"])
        parser.add_argument("--seed", type=int)
        parser.add_argument("--duration", type=float)
        parser.add_argument("--out", help="output JSON-lines path")

    def run(self, **options):
        fields = ("num_instances", "num_bins", "obs_noise", "task", "seed", "duration")
        serializer = DatasetConfigSerializer(
            data={f: options[f] for f in fields if options.get(f) is not None}
        )
        serializer.is_valid(raise_exception=True)
        dataset = build_dataset(serializer.validated_data)

        path = save_dataset(options.get("out") or settings.OUT_DIR / "dataset.jsonl", dataset)
        self.stdout.write(self.style.SUCCESS(f"wrote {len(dataset)} instances to {path}"))
