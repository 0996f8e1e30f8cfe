from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Nothing here is served over HTTP; the key only satisfies Django's checks.
SECRET_KEY = config("SECRET_KEY", default="tempsamp-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    "rest_framework",
    "grounding",
    "optimization",
]


# Database
# Run registry only; see optimization.models

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": config("TEMPSAMP_DB_PATH", default=str(BASE_DIR / "db.sqlite3")),
    }
}

DEFAULT_AUTO_FIELD = "django.db.models.AutoField"


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Experiments

OUT_DIR = Path(config("TEMPSAMP_OUT_DIR", default=str(BASE_DIR / "runs")))

# strategies and seeds `compare` runs when none are given
COMPARE_STRATEGIES = config("TEMPSAMP_COMPARE_STRATEGIES", default="grpo,shape", cast=Csv())

COMPARE_SEEDS = config("TEMPSAMP_COMPARE_SEEDS", default="0,1,2", cast=Csv(int))


# Logging

_LOG_LEVELS = {
    "error": "ERROR",
    "warn": "WARNING",
    "warning": "WARNING",
    "info": "INFO",
    "debug": "DEBUG",
}

LOG_LEVEL = _LOG_LEVELS.get(config("TEMPSAMP_LOG_LEVEL", default="info").lower(), "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "grounding": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
        "optimization": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}
