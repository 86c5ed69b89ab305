"""
Tests for the `optimal_designs` certification module.
"""

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from optimal_designs import certification
from optimal_designs.basis import linear_basis_no_intercept
from optimal_designs.design import Criterion, DesignDensity, uniform_density
from optimal_designs.exceptions import DegenerateRing, OptimalDesignError
from optimal_designs.regions import VERTEX, QuadratureGrid, grid_box, grid_disc
from test_utils import point_masses, ring_density


class TestCertify(SimpleTestCase):
    """
    Tests of the equivalence-theorem certificate.
    """

    def test_uniform_disc_linear(self):
        grid = grid_disc((0.0, 0.0), 1.0, 80, 160)
        model = linear_basis_no_intercept(2)
        certificate = certification.certify(uniform_density(grid), grid, model, 'D')
        assert certificate.criterion is Criterion.D
        assert certificate.bound == 2.0
        assert_allclose(certificate.gap, 4 * (1 - 1 / 160) ** 2 - 2, rtol=1e-3)
        assert_allclose(np.hypot(*certificate.argmax_node), 1 - 1 / 160)
        assert not certificate.certified
        assert certificate.grid_nodes == grid.size

    def test_a_bound(self):
        grid = grid_disc((0.0, 0.0), 1.0, 20, 40)
        model = linear_basis_no_intercept(2)
        certificate = certification.certify(uniform_density(grid), grid, model, Criterion.A)
        assert certificate.bound == 1.0
        assert certificate.gap > 0

    def test_to_dict(self):
        grid = grid_disc((0.0, 0.0), 1.0, 20, 40)
        certificate = certification.certify(uniform_density(grid), grid, linear_basis_no_intercept(2), 'D')
        data = certificate.to_dict()
        assert data['criterion'] == 'D'
        assert data['grid_relative'] is True
        assert data['refined_nodes'] is None
        assert len(data['argmax_node']) == 2

    def test_refined(self):
        grid = grid_disc((0.0, 0.0), 1.0, 20, 40)
        model = linear_basis_no_intercept(2)
        f = uniform_density(grid)
        coarse = certification.certify(f, grid, model, 'D')
        refined = certification.certify_refined(f, grid, model, 'D', refine=2)
        assert refined.gap >= coarse.gap
        assert refined.grid_nodes == grid.size
        assert refined.refined_nodes == 4 * grid.size
        with self.assertRaises(OptimalDesignError):
            certification.certify_refined(f, grid, model, 'D', refine=0)


class TestExtractSupport(SimpleTestCase):
    """
    Tests of support-point extraction.
    """

    def setUp(self):
        super().setUp()
        self.grid = grid_box([(-1.0, 1.0)] * 2, 11, rule=VERTEX)

    def test_point_masses(self):
        f = point_masses(self.grid, [0, 60, 120], [0.2, 0.5, 0.3])
        points, residual = certification.extract_support(f, self.grid)
        assert [point.n_cells for point in points] == [1, 1, 1]
        assert_allclose([point.weight for point in points], [0.5, 0.3, 0.2])
        assert points[0].location == (0.0, 0.0)
        assert points[1].location == (1.0, 1.0)
        assert points[2].location == (-1.0, -1.0)
        assert_allclose(points[0].peak_density, 0.5 / self.grid.measures[60])
        assert abs(residual) <= 1e-15

    def test_adjacent_cells_merge(self):
        f = point_masses(self.grid, [60, 61, 0], [0.3, 0.3, 0.4])
        points, _residual = certification.extract_support(f, self.grid)
        assert len(points) == 2
        assert points[0].n_cells == 2
        assert_allclose(points[0].weight, 0.6)
        assert_allclose(points[0].location, self.grid.nodes[[60, 61]].mean(axis=0))
        assert points[1].n_cells == 1

    def test_uniform_is_one_cluster(self):
        points, residual = certification.extract_support(uniform_density(self.grid), self.grid)
        assert len(points) == 1
        assert points[0].n_cells == self.grid.size
        assert_allclose(points[0].location, [0.0, 0.0], atol=1e-12)
        assert abs(residual) <= 1e-12

    def test_mass_floor(self):
        grid = grid_box([(0.0, 1.0)], 10)
        masses = np.full(10, 1e-7)
        masses[[2, 7]] = 0.5
        f = DesignDensity.from_masses(grid, masses)
        points, residual = certification.extract_support(f, grid)
        assert len(points) == 2
        assert_allclose(residual, 8e-7 / (1 + 8e-7), rtol=1e-6)
        points, residual = certification.extract_support(f, grid, mass_floor=1e-8)
        assert len(points) == 1
        assert abs(residual) <= 1e-12

    def test_node_order_does_not_matter(self):
        f = point_masses(self.grid, [0, 1, 60, 120, 110], [0.1, 0.1, 0.4, 0.25, 0.15])
        order = np.random.default_rng(3).permutation(self.grid.size)
        shuffled = QuadratureGrid(
            region=self.grid.region,
            nodes=self.grid.nodes[order].copy(),
            measures=self.grid.measures[order].copy(),
            adjacency=self.grid.adjacency[order][:, order].tocsr(),
            rule=self.grid.rule,
            resolution=self.grid.resolution,
        )
        expected, _residual = certification.extract_support(f, self.grid)
        actual, _residual = certification.extract_support(DesignDensity(shuffled, f.values[order]), shuffled)
        assert len(actual) == len(expected) == 4
        for left, right in zip(actual, expected):
            assert_allclose(left.location, right.location, atol=1e-15)
            assert_allclose(left.weight, right.weight, rtol=1e-14)
            assert left.n_cells == right.n_cells


class TestRings(SimpleTestCase):
    """
    Tests of the polar ring statistics.
    """

    def setUp(self):
        super().setUp()
        self.grid = grid_disc((0.0, 0.0), 1.0, 80, 160)

    def test_uniform_outer_ring(self):
        f = ring_density(self.grid, 79)
        assert certification.ring_uniformity(f, self.grid, 8) <= 1e-12
        # sector boundaries that split grid sectors
        assert certification.ring_uniformity(f, self.grid, 7) <= 1e-12
        band, mass = certification.outer_band(f, self.grid)
        assert band == slice(79, 80)
        assert_allclose(mass, 1.0)

    def test_uneven_ring(self):
        polar = self.grid.polar
        masses = np.zeros((polar.n_r, polar.n_theta))
        masses[-1, :] = 1.0
        masses[-1, :20] = 2.0
        f = DesignDensity.from_masses(self.grid, masses.ravel())
        # one sector of eight holds 2 / 9 of the mass against a mean of 1 / 8
        assert_allclose(certification.ring_uniformity(f, self.grid, 8), (2 / 9 - 1 / 8) * 8, rtol=1e-12)

    def test_band(self):
        polar = self.grid.polar
        masses = np.zeros((polar.n_r, polar.n_theta))
        masses[0, :] = 1.0
        masses[76:, :] = 1.0
        f = DesignDensity.from_masses(self.grid, masses.ravel())
        band, mass = certification.outer_band(f, self.grid)
        assert band == slice(76, 80)
        assert_allclose(mass, certification.ring_masses(f, self.grid)[76:].sum())

    def test_degenerate_ring(self):
        polar = self.grid.polar
        masses = np.zeros((polar.n_r, polar.n_theta))
        masses[0, :] = 0.995 / polar.n_theta
        masses[-1, :] = 0.005 / polar.n_theta
        f = DesignDensity.from_masses(self.grid, masses.ravel())
        with self.assertRaises(DegenerateRing):
            certification.ring_uniformity(f, self.grid, 8)

    def test_needs_polar_grid(self):
        grid = grid_box([(-1.0, 1.0)] * 2, 5)
        with self.assertRaises(OptimalDesignError):
            certification.ring_masses(uniform_density(grid), grid)
