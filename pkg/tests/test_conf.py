"""
Tests for the plugin settings and `optimal_designs.conf`.
"""

import os
from types import SimpleNamespace
from unittest.mock import patch

from django.test import SimpleTestCase, override_settings

from optimal_designs.conf import DEFAULTS, OUTPUT_DIR_ENV, get_setting
from optimal_designs.settings import common, production
from optimal_designs.settings import test as test_plugin


class TestPluginSettings(SimpleTestCase):
    """
    Tests for the settings modules a host project loads.
    """

    def test_common(self):
        settings = SimpleNamespace()
        common.plugin_settings(settings)
        self.assertEqual(settings.OPTIMAL_DESIGNS, DEFAULTS)
        settings.OPTIMAL_DESIGNS['THREADS'] = 8
        self.assertEqual(DEFAULTS['THREADS'], 1)

    def test_production_env_tokens(self):
        settings = SimpleNamespace(ENV_TOKENS={
            'OPTIMAL_DESIGNS_OUTPUT_DIR': '/var/optdes',
            'OPTIMAL_DESIGNS_MAX_GRID_NODES': '5000',
        })
        common.plugin_settings(settings)
        production.plugin_settings(settings)
        self.assertEqual(settings.OPTIMAL_DESIGNS['OUTPUT_DIR'], '/var/optdes')
        self.assertEqual(settings.OPTIMAL_DESIGNS['MAX_GRID_NODES'], 5000)
        self.assertEqual(settings.OPTIMAL_DESIGNS['MASS_FLOOR'], DEFAULTS['MASS_FLOOR'])

    def test_production_without_tokens(self):
        settings = SimpleNamespace()
        common.plugin_settings(settings)
        production.plugin_settings(settings)
        self.assertEqual(settings.OPTIMAL_DESIGNS, DEFAULTS)

    def test_test_settings(self):
        settings = SimpleNamespace()
        test_plugin.plugin_settings(settings)
        self.assertEqual(settings.OPTIMAL_DESIGNS['MAX_GRID_NODES'], 200_000)


class TestGetSetting(SimpleTestCase):
    """
    Tests for get_setting.
    """

    @override_settings(OPTIMAL_DESIGNS={'THREADS': 3})
    def test_configured_value(self):
        self.assertEqual(get_setting('THREADS'), 3)

    @override_settings(OPTIMAL_DESIGNS={'THREADS': 3})
    def test_falls_back_to_default(self):
        self.assertEqual(get_setting('MASS_FLOOR'), DEFAULTS['MASS_FLOOR'])

    @override_settings(OPTIMAL_DESIGNS={'OUTPUT_DIR': 'from-settings'})
    def test_environment_overrides_output_dir(self):
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: 'from-env'}):
            self.assertEqual(get_setting('OUTPUT_DIR'), 'from-env')
        with patch.dict(os.environ, {OUTPUT_DIR_ENV: ''}):
            self.assertEqual(get_setting('OUTPUT_DIR'), 'from-settings')
