"""Settings file for production runs on a Celery cluster."""

from .base import *  # noqa: F403
from .base import env

# General settings

DEBUG = False

SECRET_KEY = env("DJANGO_SECRET_KEY")


# Celery settings

CELERY_BROKER_URL = env("REDIS_URL")
CELERY_RESULT_BACKEND = env("REDIS_URL")
CELERY_TASK_ALWAYS_EAGER = False
# One replicate run per worker slot at a time
CELERY_WORKER_PREFETCH_MULTIPLIER = 1
CELERY_TASK_ACKS_LATE = True
