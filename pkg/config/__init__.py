"""Project configuration; importing it loads the Celery application for `execute_run` workers."""

from .celery import app as celery_app

__all__ = ("celery_app",)
