"""Bayesian optimization engine app configuration."""

from django.apps import AppConfig


class BayesOptConfig(AppConfig):
    """Bayesian optimization engine app configuration."""

    name = "app.bayesopt"
    verbose_name = "Bayesian optimization engine"
