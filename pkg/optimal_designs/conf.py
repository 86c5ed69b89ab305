"""
Access to the ``OPTIMAL_DESIGNS`` settings block.
"""

import os

from django.conf import settings

DEFAULTS = {
    'MAX_GRID_NODES': 2_000_000,
    'MAX_SOFT_DIMENSION': 4,
    'OUTPUT_DIR': 'optdes-out',
    'MASS_FLOOR': 1e-4,
    'THREADS': 1,
}

OUTPUT_DIR_ENV = 'OPTDES_OUT'


def get_setting(name):
    """
    Return the configured value of ``name``, falling back to the package default.

    ``OUTPUT_DIR`` may be overridden with the ``OPTDES_OUT`` environment variable.
    The numerical modules are usable without configured Django settings.
    """
    if name == 'OUTPUT_DIR' and os.environ.get(OUTPUT_DIR_ENV):
        return os.environ[OUTPUT_DIR_ENV]
    configured = getattr(settings, 'OPTIMAL_DESIGNS', None) if settings.configured else None
    if configured and name in configured:
        return configured[name]
    return DEFAULTS[name]
