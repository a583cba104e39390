"""Lists the built-in experiment plans."""

from typing import Any

from django.core.management.base import BaseCommand

from app.experiments.plans import builtin_plan_names, load_plan


class Command(BaseCommand):
    help = "Lists the built-in experiment plans."

    def handle(self, *args: Any, **options: Any) -> None:
        for name in builtin_plan_names():
            plan = load_plan(name)
            self.stdout.write(f"{name:<28} {plan.n_runs:>5} runs  {plan.description}")
