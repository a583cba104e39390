"""Summarizes a results directory."""

from typing import Any

from django.core.management.base import BaseCommand, CommandError, CommandParser

from app.core.exceptions import InputError, SchemaError
from app.experiments.summary import summarize


class Command(BaseCommand):
    help = "Writes summary.csv and regret and runtime plots for a results directory."

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument("results_dir", help="Directory holding results.csv.")

    def handle(self, *args: Any, **options: Any) -> None:
        try:
            summaries, written = summarize(options["results_dir"])
        except (InputError, SchemaError) as e:
            raise CommandError(str(e)) from e

        for summary in summaries:
            flag = "-" if summary.sublinear is None else ("sublinear" if summary.sublinear else "not sublinear")
            self.stdout.write(
                f"{summary.function:<16} {summary.solver:<20} {summary.algorithm:<12} "
                f"R_T={summary.median_R_T:.4g} solve_ms={summary.median_solve_ms:.4g} {flag}"
            )
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(written)} file(s)"))
