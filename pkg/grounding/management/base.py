"""
Shared plumbing for the project's management commands: one exit-code
contract for every subcommand.

    0  success
    1  runtime failure
    2  validation or schema failure
"""
import logging

from django.core.exceptions import ObjectDoesNotExist, ValidationError
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

logger = logging.getLogger(__name__)

VALIDATION_EXIT = 2
RUNTIME_EXIT = 1


def flatten_detail(detail, path=()):
    """Nested DRF error detail -> "section.field: message" lines."""
    if isinstance(detail, dict):
        for key, value in detail.items():
            yield from flatten_detail(value, path + (str(key),))
    elif isinstance(detail, (list, tuple)):
        for value in detail:
            yield from flatten_detail(value, path)
    else:
        yield f"{'.'.join(path)}: {detail}" if path else str(detail)


def describe(exc) -> str:
    if isinstance(exc, serializers.ValidationError):
        return "; ".join(flatten_detail(exc.detail))
    if isinstance(exc, ValidationError):
        return "; ".join(exc.messages)
    return str(exc)


class ExperimentCommand(BaseCommand):
    """
    Subclasses implement ``run(**options)`` instead of ``handle``; errors are
    translated into CommandError with the matching return code.
    """

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except CommandError:
            raise
        except (serializers.ValidationError, ValidationError, ObjectDoesNotExist) as exc:
            raise CommandError(describe(exc), returncode=VALIDATION_EXIT)
        except Exception as exc:
            logger.exception("%s failed", self.__class__.__module__)
            raise CommandError(f"{exc.__class__.__name__}: {exc}", returncode=RUNTIME_EXIT)


def add_shaping_arguments(parser):
    parser.add_argument("--tau", type=float)
    parser.add_argument("--alpha1", type=float)
    parser.add_argument("--alpha2", type=float)
    parser.add_argument("--lambda-off", dest="lambda_off", type=float)
    parser.add_argument("--kappa", type=float)


def add_experiment_arguments(parser):
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--steps", help='"N" (split over both phases) or "N1,N2"')
    parser.add_argument("--g", type=int, help="group size G")
    parser.add_argument("--wf", type=float, help="format reward weight")
    add_shaping_arguments(parser)
    parser.add_argument(
        "--register", action="store_true", help="record the run in the run registry"
    )
