import pandas as pd

from grounding.exceptions import ConfigInvalid
from grounding.management.base import ExperimentCommand, add_shaping_arguments
from optimization.advantage import shape_reward
from optimization.serializers import ShapingConfigSerializer

SHAPING_FIELDS = ("tau", "alpha1", "alpha2", "lambda_off", "kappa")


def shaping_curve(cfg, resolution: int) -> pd.DataFrame:
    """(r, shaped r) over an even grid on [0, r_max], plus the exact tau row."""
    grid = [k * cfg.r_max / resolution for k in range(resolution + 1)]
    if cfg.tau not in grid:
        grid.append(cfg.tau)
    grid.sort()
    return pd.DataFrame({"r": grid, "shaped_r": [shape_reward(r, cfg) for r in grid]})


class Command(ExperimentCommand):
    help = "Print the reward-shaping curve as CSV."

    def add_arguments(self, parser):
        add_shaping_arguments(parser)
        parser.add_argument("--resolution", type=int, default=100, help="grid intervals on [0, r_max]")

    def run(self, **options):
        serializer = ShapingConfigSerializer(
            data={f: options[f] for f in SHAPING_FIELDS if options.get(f) is not None}
        )
        serializer.is_valid(raise_exception=True)
        resolution = options.get("resolution") or 0
        if resolution < 1:
            raise ConfigInvalid(
                "%(field)s: %(rule)s (got %(value)s)",
                params={"field": "resolution", "rule": "resolution ≥ 1", "value": resolution},
            )
        curve = shaping_curve(serializer.validated_data, resolution)
        self.stdout.write(curve.to_csv(index=False, float_format="%.10f"), ending="")
