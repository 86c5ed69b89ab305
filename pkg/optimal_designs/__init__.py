"""
Continuous D- and A-optimal experimental designs for linear regression models.
"""

__version__ = '0.3.0'

default_app_config = 'optimal_designs.apps.OptimalDesignsConfig'  # pylint: disable=invalid-name
