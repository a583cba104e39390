"""Experiments app configuration."""

from django.apps import AppConfig


class ExperimentsConfig(AppConfig):
    """Experiments app configuration."""

    name = "app.experiments"
    verbose_name = "Experiment plans and reports"
