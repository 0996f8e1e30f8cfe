from concurrent.futures import ThreadPoolExecutor

import pandas as pd
from django.conf import settings

from grounding.exceptions import ConfigInvalid
from grounding.management.base import ExperimentCommand, add_experiment_arguments
from grounding.serializers import write_json
from optimization.experiment import OVERRIDES, build_dataset, build_holdout, load_experiment, run_training
from optimization.serializers import STRATEGY_NAMES
from optimization.trainer import SCHEMA_VERSION

COMPARE_CSV = "compare.csv"
COMPARE_JSON = "compare.json"

# holdout report key -> CSV column
HOLDOUT_METRICS = {
    "R1@0.5": "holdout_r1_0.5",
    "mIoU": "holdout_miou",
    "mAP": "holdout_map",
    "HIT@1": "holdout_hit1",
}

COLUMNS = (
    "strategy",
    "seed",
    "train_size",
    "steps",
    "top1_q1",
    "top1_median",
    "top1_q3",
    "top1_iqr",
    "top1_mean",
    "mean_abs_skewness",
    "anchor_warnings",
    "final_kl",
    *HOLDOUT_METRICS.values(),
)


def _split(value):
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _integers(value, field):
    try:
        return [int(s) for s in _split(value)]
    except ValueError:
        raise ConfigInvalid(f"{field}: expected comma-separated integers")


def comparison_row(summary, train_size) -> dict:
    top1 = summary["top1"] or {}
    holdout = (summary.get("holdout") or {}).get("metrics", {})
    row = {
        "strategy": summary["strategy"],
        "seed": summary["config"]["seed"],
        "train_size": train_size,
        "steps": summary["steps"],
        "top1_q1": top1.get("q1"),
        "top1_median": top1.get("median"),
        "top1_q3": top1.get("q3"),
        "top1_iqr": top1.get("iqr"),
        "top1_mean": top1.get("mean"),
        "mean_abs_skewness": summary["mean_abs_skewness"],
        "anchor_warnings": summary["anchor_warnings"],
        "final_kl": summary["final_kl"],
    }
    for key, column in HOLDOUT_METRICS.items():
        row[column] = holdout.get(key)
    return row


class Command(ExperimentCommand):
    help = (
        "Train every (strategy, seed, training-set size) combination and write "
        "per-run top-1 reward quartiles, mean |skewness| and held-out metrics "
        "as plot-ready CSV."
    )

    def add_arguments(self, parser):
        add_experiment_arguments(parser)
        parser.add_argument("--strategies", help=f"comma-separated subset of {', '.join(STRATEGY_NAMES)}")
        parser.add_argument("--seeds", help="comma-separated training seeds")
        parser.add_argument(
            "--train-sizes",
            dest="train_sizes",
            help="comma-separated training-set sizes; each run trains on that many leading instances",
        )
        parser.add_argument(
            "--holdout", type=int, help="score every final policy on this many held-out instances"
        )
        parser.add_argument("--workers", type=int, default=1)

    def parse_runs(self, options, dataset_size):
        strategies = _split(options["strategies"]) if options.get("strategies") else list(settings.COMPARE_STRATEGIES)
        unknown = [s for s in strategies if s not in STRATEGY_NAMES]
        if unknown or not strategies:
            raise ConfigInvalid(
                "strategies: expected names from %(names)s, got %(value)s",
                params={"names": ", ".join(STRATEGY_NAMES), "value": ", ".join(unknown) or "nothing"},
            )
        seeds = _integers(options["seeds"], "seeds") if options.get("seeds") else list(settings.COMPARE_SEEDS)
        sizes = [dataset_size]
        if options.get("train_sizes"):
            sizes = _integers(options["train_sizes"], "train_sizes")
            if not sizes or any(not 1 <= n <= dataset_size for n in sizes):
                raise ConfigInvalid(
                    "train_sizes: each size must lie in [1, %(n)s], got %(value)s",
                    params={"n": dataset_size, "value": options["train_sizes"]},
                )
        return [(strategy, seed, size) for size in sizes for strategy in strategies for seed in seeds]

    def run(self, **options):
        base = load_experiment(
            options.get("config"), {flag: options.get(flag) for flag in OVERRIDES}
        )
        dataset = build_dataset(base.dataset)
        sweep = bool(options.get("train_sizes"))
        # every run is validated before the first one starts
        runs = [
            (base.with_run(strategy, seed).with_train_size(size), size)
            for strategy, seed, size in self.parse_runs(options, len(dataset))
        ]
        holdout = None
        if options.get("holdout") is not None:
            holdout = build_holdout(base.dataset, options["holdout"])
        root = base.output.directory / base.output.name
        register = options.get("register", False)

        def train_one(run):
            experiment, size = run
            name = f"{experiment.train.label}-seed{experiment.train.seed}"
            if sweep:
                name = f"{name}-n{size}"
            return run_training(experiment, root / name, dataset[:size], register, holdout)

        workers = options.get("workers") or 1
        # sqlite registry writes stay on one thread
        if workers > 1 and not register:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                summaries = list(pool.map(train_one, runs))
        else:
            summaries = [train_one(run) for run in runs]

        frame = pd.DataFrame(
            [comparison_row(summary, size) for summary, (_, size) in zip(summaries, runs)],
            columns=list(COLUMNS),
        )
        root.mkdir(parents=True, exist_ok=True)
        frame.to_csv(root / COMPARE_CSV, index=False)
        write_json(
            root / COMPARE_JSON,
            {
                "schema_version": SCHEMA_VERSION,
                "dataset": base.dataset.as_dict(),
                "holdout_size": None if holdout is None else len(holdout),
                "runs": summaries,
            },
        )
        self.stdout.write(frame.to_string(index=False))
        self.stdout.write(self.style.SUCCESS(f"{len(summaries)} runs written to {root / COMPARE_CSV}"))
