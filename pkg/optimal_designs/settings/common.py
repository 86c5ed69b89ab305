"""
Common Pluggable Django App settings
"""

from optimal_designs.conf import DEFAULTS


def plugin_settings(settings):
    """
    Injects local settings into django settings
    """
    settings.OPTIMAL_DESIGNS = dict(DEFAULTS)
