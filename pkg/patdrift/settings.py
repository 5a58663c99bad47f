"""
Django settings for the patdrift project.

patdrift has no web surface: Django provides configuration, the
management-command CLI (``python manage.py <subcommand>``) and the test
runner. Analysis knobs are read from the environment (or a ``.env`` file
next to ``manage.py``).
"""

from pathlib import Path
from dotenv import load_dotenv
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / ".env")

PATDRIFT_VERSION = "1.0.0"

# Parallelism for ingest / family building. Empty means "all CPUs".
PATDRIFT_THREADS = os.getenv("PATDRIFT_THREADS", "")

# Analysis window (earliest priority year, inclusive)
ANALYSIS_FROM_YEAR = int(os.getenv("PATDRIFT_FROM_YEAR", "1980"))
ANALYSIS_TO_YEAR = int(os.getenv("PATDRIFT_TO_YEAR", "2016"))

CITATION_WINDOW_YEARS = int(os.getenv("PATDRIFT_CITATION_WINDOW", "5"))
MIN_CLASS_SIZE = int(os.getenv("PATDRIFT_MIN_CLASS_SIZE", "1000"))
RECLASS_AGGREGATION = os.getenv("PATDRIFT_RECLASS_AGGREGATION", "pooled")

INGEST_CHUNK_ROWS = int(os.getenv("PATDRIFT_INGEST_CHUNK_ROWS", "200000"))

LOG_LEVEL = os.getenv("PATDRIFT_LOG_LEVEL", "INFO").upper()


# Quick-start development settings - unsuitable for production
# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv("PATDRIFT_SECRET_KEY", "patdrift-local-only-not-used-for-signing")

DEBUG = os.getenv("PATDRIFT_DEBUG", "False").lower() == "true"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'drift',
]

# No relational storage; snapshot stores are versioned binary files.
DATABASES = {}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "console": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "console",
        },
    },
    "loggers": {
        "drift": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
