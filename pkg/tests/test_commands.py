"""
Tests for the `optimal_design` management command and the ``optdes`` script.
"""

import os
import shutil
import tempfile
from io import StringIO
from unittest.mock import patch

import yaml
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from optimal_designs import cli
from optimal_designs.presets import ComparisonRow
from optimal_designs.runs import EXIT_DEVIATION, EXIT_ERROR

CONFIG = """\
model:
  basis: full-quadratic
  dimension: 1
region:
  kind: box
  intervals: [[-1, 1]]
  resolution: 21
  rule: vertex
solver:
  max_iters: 100
output:
  dir: {out}
"""


class TestOptimalDesignCommand(SimpleTestCase):
    """
    Tests of the solve, certify and preset subcommands.
    """

    def setUp(self):
        super().setUp()
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)
        self.out = os.path.join(self.tmp, 'out')
        self.config = os.path.join(self.tmp, 'run.yaml')
        with open(self.config, 'w', encoding='utf-8') as config:
            config.write(CONFIG.format(out=self.out))

    def call(self, *args):
        stdout = StringIO()
        call_command('optimal_design', *args, stdout=stdout)
        return stdout.getvalue()

    def test_preset_list(self):
        output = self.call('preset', 'list')
        for name in ('setting1', 'setting2', 'setting3', 'setting4'):
            assert f'{name}: ' in output
        assert 'expected values for: D, A' in output

    def test_solve_config(self):
        output = self.call('solve', '--config', self.config)
        assert 'D solve stopped after' in output
        assert 'Wrote' in output
        assert sorted(os.listdir(self.out)) == ['density.csv', 'history.csv', 'report.txt', 'support.csv']

    def test_solve_overrides(self):
        elsewhere = os.path.join(self.tmp, 'elsewhere')
        self.call('solve', '--config', self.config, '--criterion', 'a', '--max-iters', '5', '--out', elsewhere,
                  '--emit', 'report')
        assert os.listdir(elsewhere) == ['report.txt']
        with open(os.path.join(elsewhere, 'report.txt'), encoding='utf-8') as source:
            report = yaml.safe_load(source)
        assert report['config']['criterion'] == 'A'
        assert report['termination']['iterations'] == 5
        assert not os.path.exists(self.out)

    def test_malformed_config(self):
        with open(self.config, 'a', encoding='utf-8') as config:
            config.write('colour: blue\n')
        with self.assertRaises(CommandError) as context:
            self.call('solve', '--config', self.config)
        assert context.exception.returncode == EXIT_ERROR
        assert 'colour' in str(context.exception)
        assert not os.path.exists(self.out)

    def test_deviation(self):
        out = os.path.join(self.tmp, 's3')
        with patch('optimal_designs.runs.compare', return_value=([], False)):
            with self.assertRaises(CommandError) as context:
                self.call('solve', '--preset', 'setting3', '--grid', '5', '--max-iters', '5', '--out', out)
        assert context.exception.returncode == EXIT_DEVIATION
        assert os.path.exists(os.path.join(out, 'report.txt'))

    def test_informational_rows(self):
        out = os.path.join(self.tmp, 's4')
        rows = [
            ComparisonRow('criterion value', 7.4554, 7.4554, 1e-3, deviation=0.0),
            ComparisonRow('corner (+1.000, +1.000, +1.000)', 0.05, 0.0684, 0.003, informational=True),
        ]
        with patch('optimal_designs.runs.compare', return_value=(rows, True)):
            output = self.call('solve', '--preset', 'setting3', '--grid', '5', '--max-iters', '5', '--out', out)
        assert 'criterion value: 7.4554 vs 7.4554' in output
        assert output.count(' ok\n') == 1
        assert output.count(' info\n') == 1
        assert 'FAIL' not in output

    def test_certify(self):
        self.call('solve', '--config', self.config, '--emit', 'density')
        density = os.path.join(self.out, 'density.csv')
        certificate = yaml.safe_load(self.call('certify', '--config', self.config, '--density', density))['certificate']
        assert certificate['criterion'] == 'D'
        assert certificate['grid_nodes'] == 21
        assert certificate['refined_nodes'] is None
        refined = yaml.safe_load(
            self.call('certify', '--config', self.config, '--density', density, '--refine', '2')
        )['certificate']
        assert refined['refined_nodes'] == 41
        assert refined['gap'] >= certificate['gap']

    def test_certify_wrong_grid(self):
        self.call('solve', '--config', self.config, '--emit', 'density')
        density = os.path.join(self.out, 'density.csv')
        with self.assertRaises(CommandError) as context:
            self.call('certify', '--config', self.config, '--grid', '11', '--density', density)
        assert context.exception.returncode == EXIT_ERROR


class TestConsoleScript(SimpleTestCase):

    def test_main(self):
        with patch('optimal_designs.management.commands.optimal_design.Command.run_from_argv') as run_from_argv:
            cli.main(['preset', 'list'])
        run_from_argv.assert_called_once_with(['optdes', 'optimal_design', 'preset', 'list'])
