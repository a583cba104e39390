"""Validates an experiment plan without running it."""

from typing import Any

from django.core.management.base import BaseCommand, CommandError, CommandParser

from app.core.exceptions import BayesOptError
from app.experiments.plans import build_config, expand_plan, load_plan, plan_hash


class Command(BaseCommand):
    help = "Parses a plan and resolves every run configuration, reporting the first error."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("plan", help="Plan file or built-in plan name.")
        parser.add_argument(
            "--resolve", action="store_true", help="Also build every run configuration (constructs objectives)."
        )

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            plan = load_plan(options["plan"])
            payloads = expand_plan(plan)
            if options["resolve"]:
                for payload in payloads:
                    build_config(payload)
        except BayesOptError as e:
            raise CommandError(str(e)) from e
        self.stdout.write(
            self.style.SUCCESS(
                f"{plan.name} is valid: {len(plan.entries)} experiment(s), {len(payloads)} run(s), "
                f"hash {plan_hash(plan)}"
            )
        )
