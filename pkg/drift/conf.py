# drift/conf.py
from django.conf import settings


def setting(name, default):
    """Read a project setting, falling back to ``default`` outside a configured Django process."""
    if not settings.configured:
        return default
    return getattr(settings, name, default)


def analysis_window():
    return (setting("ANALYSIS_FROM_YEAR", 1980), setting("ANALYSIS_TO_YEAR", 2016))
