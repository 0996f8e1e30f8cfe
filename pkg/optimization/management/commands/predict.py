from grounding.management.base import ExperimentCommand
from grounding.outputs import Schema
from grounding.serializers import write_jsonl
from optimization.experiment import load_dataset, load_policy
from optimization.inference import DEFAULT_TOP_K, predict


class Command(ExperimentCommand):
    help = "Decode a trained policy over a dataset into ranked predictions (JSON-lines)."

    def add_arguments(self, parser):
        parser.add_argument("--policy", required=True, help="policy JSON written by train")
        parser.add_argument("--dataset", required=True, help="dataset JSON-lines")
        parser.add_argument("--out", required=True, help="predictions JSON-lines path")
        parser.add_argument("--schema", choices=[s.value for s in Schema], default=Schema.ANSWER_ONLY.value)
        parser.add_argument("--top-k", dest="top_k", type=int, default=DEFAULT_TOP_K)

    def run(self, **options):
        policy = load_policy(options["policy"])
        dataset = load_dataset(options["dataset"])
        rows = predict(policy, dataset, Schema(options["schema"]), options["top_k"])
        path = write_jsonl(options["out"], rows)
        self.stdout.write(self.style.SUCCESS(f"wrote {len(rows)} predictions to {path}"))
