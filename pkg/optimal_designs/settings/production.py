"""
Production Pluggable Django App settings
"""


def plugin_settings(settings):
    """
    Injects local settings into django settings
    """
    env_tokens = getattr(settings, 'ENV_TOKENS', {})
    if env_tokens.get('OPTIMAL_DESIGNS_OUTPUT_DIR'):
        settings.OPTIMAL_DESIGNS['OUTPUT_DIR'] = env_tokens['OPTIMAL_DESIGNS_OUTPUT_DIR']
    if env_tokens.get('OPTIMAL_DESIGNS_MAX_GRID_NODES'):
        settings.OPTIMAL_DESIGNS['MAX_GRID_NODES'] = int(env_tokens['OPTIMAL_DESIGNS_MAX_GRID_NODES'])
