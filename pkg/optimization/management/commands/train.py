from grounding.management.base import ExperimentCommand, add_experiment_arguments
from optimization.experiment import OVERRIDES, POLICY, STEP_LOG, SUMMARY, load_experiment, run_training
from optimization.serializers import STRATEGY_NAMES


class Command(ExperimentCommand):
    help = "Train the interval policy with mixed-policy GRPO and write log, summary and policy."

    def add_arguments(self, parser):
        add_experiment_arguments(parser)
        parser.add_argument("--strategy", choices=STRATEGY_NAMES)

    def run(self, **options):
        experiment = load_experiment(
            options.get("config"), {flag: options.get(flag) for flag in OVERRIDES}
        )
        out_dir = experiment.output.directory / experiment.output.name
        summary = run_training(experiment, out_dir, register=options.get("register", False))

        self.stdout.write(f"wrote {out_dir / STEP_LOG}, {out_dir / SUMMARY}, {out_dir / POLICY}")
        if summary["top1"] is not None:
            self.stdout.write(
                self.style.SUCCESS(
                    f"{summary['strategy']}: median top-1 reward {summary['top1']['median']:.4f} "
                    f"(IQR {summary['top1']['iqr']:.4f}) over the final {summary['final_window_steps']} steps"
                )
            )
