"""
Tests for the `optimal_designs` api module.
"""

import os
import shutil
import tempfile

import ddt
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal
from super_csv.csv_processor import ValidationError

from optimal_designs import api
from optimal_designs.certification import SupportPoint
from optimal_designs.design import uniform_density
from optimal_designs.exceptions import ConfigurationError
from optimal_designs.regions import grid_box, grid_disc
from optimal_designs.solvers import IterationRecord
from test_utils import random_density


class BaseTests(SimpleTestCase):
    """
    Scratch directory and a small grid for all test cases.
    """

    def setUp(self):
        super().setUp()
        self.tmp = tempfile.mkdtemp()
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)
        self.grid = grid_box([(0.0, 1.0)], 5)

    def density_lines(self, density=None):
        density = density or uniform_density(self.grid)
        return api.render_csv(api.DensityCSVProcessor(density=density)).splitlines()

    def load(self, lines, grid=None):
        path = os.path.join(self.tmp, 'density.csv')
        with open(path, 'w', encoding='utf-8') as out:
            out.write('\n'.join(lines) + '\n')
        return api.load_density_csv(path, grid or self.grid)


class TestExport(BaseTests):
    """
    Tests of CSV exports.
    """

    def test_grid(self):
        rows = list(api.GridCSVProcessor(grid=self.grid).get_iterator())
        assert len(rows) == 6
        assert rows[0].strip() == 'w1,measure'
        assert rows[1].strip() == '0.10000000000000001,0.20000000000000001'

    def test_density(self):
        lines = self.density_lines()
        assert lines[0] == 'w1,measure,density,mass'
        assert len(lines) == 6
        fields = lines[3].split(',')
        assert fields[:2] == ['0.5', '0.20000000000000001']
        assert_allclose([float(fields[2]), float(fields[3])], [1.0, 0.2])

    def test_disc_density_columns(self):
        grid = grid_disc((0.0, 0.0), 1.0, 4, 8)
        lines = api.render_csv(api.DensityCSVProcessor(density=uniform_density(grid))).splitlines()
        assert lines[0] == 'w1,w2,measure,density,mass'
        assert len(lines) == 33

    def test_support(self):
        support = [SupportPoint((1.0, -1.0), 0.25, 3, 12.5), SupportPoint((0.0, 0.0), 0.125, 1, 4.0)]
        rows = list(api.SupportCSVProcessor(support=support, dimension=2).get_iterator())
        assert rows[0].strip() == 'w1,w2,weight,n_cells,peak_density'
        assert rows[1].strip() == '1,-1,0.25,3,12.5'
        assert rows[2].strip() == '0,0,0.125,1,4'

    def test_history(self):
        history = [IterationRecord(0, -1.5, 0.0, 0.0, 2.0, 0.5, 0.5, 0.0)]
        rows = list(api.HistoryCSVProcessor(history=history).get_iterator())
        assert rows[0].strip().split(',') == api.HistoryCSVProcessor.columns
        assert rows[1].strip() == '0,-1.5,0,0,2,500,0.5,0'

    def test_write(self):
        path = api.write_csv(api.GridCSVProcessor(grid=self.grid), os.path.join(self.tmp, 'grid.csv'))
        with open(path, encoding='utf-8') as source:
            assert source.read().splitlines()[0] == 'w1,measure'


@ddt.ddt
class TestLoadDensity(BaseTests):
    """
    Tests of reading densities back onto a grid.
    """

    def test_round_trip_is_exact(self):
        grid = grid_disc((0.0, 0.0), 1.0, 10, 20)
        density = random_density(grid, seed=21)
        path = api.emit_density_csv(density, grid, os.path.join(self.tmp, 'density.csv'))
        loaded = api.load_density_csv(path, grid)
        assert_array_equal(loaded.values, density.values)

    def test_swapped_rows(self):
        lines = self.density_lines()
        lines[1], lines[2] = lines[2], lines[1]
        with self.assertRaisesMessage(ConfigurationError, 'does not match grid node'):
            self.load(lines)

    @ddt.data(('-1', 'must not be negative'), ('abc', 'must be numbers'), ('inf', 'must be finite'))
    @ddt.unpack
    def test_bad_density(self, value, message):
        lines = self.density_lines()
        fields = lines[2].split(',')
        fields[2] = value
        lines[2] = ','.join(fields)
        with self.assertRaisesMessage(ConfigurationError, message):
            self.load(lines)

    def test_missing_column(self):
        lines = [','.join(line.split(',')[:2]) for line in self.density_lines()]
        with self.assertRaises(ConfigurationError):
            self.load(lines)

    def test_too_few_rows(self):
        with self.assertRaisesMessage(ConfigurationError, 'has 4 rows, the grid has 5 nodes'):
            self.load(self.density_lines()[:-1])

    def test_too_many_rows(self):
        lines = self.density_lines()
        with self.assertRaisesMessage(ConfigurationError, 'only 5 nodes'):
            self.load(lines + lines[-1:])

    def test_other_grid(self):
        with self.assertRaises(ConfigurationError):
            self.load(self.density_lines(), grid=grid_box([(0.0, 2.0)], 5))

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            api.load_density_csv(os.path.join(self.tmp, 'nothing.csv'), self.grid)

    def test_validate_row(self):
        processor = api.DensityCSVProcessor(grid=self.grid)
        processor.validate_row({'w1': '0.1', 'density': '1'})
        with self.assertRaisesMessage(ValidationError, 'Row does not match grid node 1'):
            processor.validate_row({'w1': '0.5', 'density': '1'})
        with self.assertRaisesMessage(ValidationError, 'Unexpected columns: weight'):
            processor.validate_row({'w1': '0.5', 'density': '1', 'weight': '1'})
