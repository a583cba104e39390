"""Runs an experiment plan."""

from typing import Any

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser

from app.core.exceptions import PlanError
from app.experiments.plans import load_plan, with_seed
from app.experiments.runner import execute_plan


class Command(BaseCommand):
    help = "Runs every replicate of an experiment plan and writes results.csv and manifest.json."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("plan", help="Plan file or built-in plan name.")
        parser.add_argument("--workers", type=int, default=None, help="Worker processes (default: BO_WORKERS).")
        parser.add_argument("--out", default=None, help="Results directory (default: BO_OUTPUT_DIR/<plan name>).")
        parser.add_argument(
            "--seed", type=int, default=None, help="Base seed overriding the plan's (default: BO_SEED)."
        )
        parser.add_argument(
            "--celery",
            action="store_true",
            default=None,
            help="Dispatch runs to Celery workers (default: BO_USE_CELERY).",
        )

    def handle(self, *args: Any, **options: Any) -> None:
        workers = options["workers"] if options["workers"] is not None else settings.BO_WORKERS
        if workers < 1:
            raise CommandError("--workers must be at least 1")
        seed = options["seed"] if options["seed"] is not None else settings.BO_SEED
        use_celery = options["celery"] if options["celery"] is not None else settings.BO_USE_CELERY

        try:
            plan = with_seed(load_plan(options["plan"]), seed)
        except PlanError as e:
            raise CommandError(str(e)) from e
        output_dir = options["out"] or settings.BO_OUTPUT_DIR / plan.name

        report = execute_plan(
            plan,
            output_dir,
            workers=workers,
            use_celery=use_celery,
            oracle_size=settings.BO_ORACLE_SIZE,
        )
        for failure in report.failures:
            self.stderr.write(f"{failure['run']}: {failure['error']}")
        if report.all_failed:
            raise CommandError(f"all {len(report.failures)} run(s) of plan {plan.name} failed")
        self.stdout.write(
            self.style.SUCCESS(
                f"{plan.name}: {len(report.completed)} completed, {len(report.skipped)} skipped, "
                f"{len(report.failures)} failed -> {report.output_dir}"
            )
        )
