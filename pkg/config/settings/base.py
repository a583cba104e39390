"""Base settings to build other settings files (local, production) upon."""

from pathlib import Path

import environ

env = environ.Env()

BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Application definition

DJANGO_APPS = [
    "django.contrib.contenttypes",
]
THIRD_PARTY_APPS = [
    "rest_framework",
]
LOCAL_APPS = [
    "app.core",
    "app.bayesopt",
    "app.experiments",
]
INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS


# Database
# Runs are persisted as files; no database is used.

DATABASES: dict[str, dict[str, object]] = {}

# https://docs.djangoproject.com/en/stable/ref/settings/#std:setting-DEFAULT_AUTO_FIELD
DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Internationalization
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = True

USE_TZ = True


# Bayesian optimization settings

BO_SEED = env.int("BO_SEED", default=None)
BO_WORKERS = env.int("BO_WORKERS", default=1)
BO_OUTPUT_DIR = Path(env("BO_OUTPUT_DIR", default=str(BASE_DIR / "results")))
BO_ORACLE_SIZE = env.int("BO_ORACLE_SIZE", default=100_000)
BO_USE_CELERY = env.bool("BO_USE_CELERY", default=False)
BO_LOG_LEVEL = env("BO_LOG_LEVEL", default="INFO")


# Celery settings

try:
    CELERY_BROKER_URL = env("REDIS_URL")
    CELERY_RESULT_BACKEND = env("REDIS_URL")
except environ.ImproperlyConfigured:
    # Use memory transport for local commands
    CELERY_BROKER_URL = "memory://"
    CELERY_RESULT_BACKEND = "cache+memory://"

CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_ACCEPT_CONTENT = ["json"]


# Logging (https://docs.djangoproject.com/en/5.1/topics/logging/#logging)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "level": "DEBUG",
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        "app": {
            "handlers": ["console"],
            "level": BO_LOG_LEVEL,
            "propagate": False,
        },
    },
}
