"""
Test utilities.

Since pytest discourages putting __init__.py into test directory (i.e. making tests a package)
one cannot import from anywhere under tests folder. However, some utility classes/methods might be useful
in multiple test modules (i.e. oracles, density builders). So this package is the place to put them.
"""

from itertools import combinations

import numpy as np

from optimal_designs.basis import design_matrix
from optimal_designs.design import DesignDensity


def random_density(grid, seed=0):
    """
    A normalized density with strictly positive random cell masses.
    """
    rng = np.random.default_rng(seed)
    masses = rng.uniform(0.05, 1.0, size=grid.size)
    return DesignDensity.from_masses(grid, masses)


def point_masses(grid, indices, weights):
    """
    Density putting ``weights[k]`` of the mass on node ``indices[k]`` and nothing elsewhere.
    """
    masses = np.zeros(grid.size)
    masses[list(indices)] = weights
    return DesignDensity.from_masses(grid, masses)


def ring_density(grid, ring):
    """
    All mass spread evenly over one ring of a polar grid.
    """
    polar = grid.polar
    masses = np.zeros((polar.n_r, polar.n_theta))
    masses[ring, :] = 1.0
    return DesignDensity.from_masses(grid, masses.ravel())


def two_point_oracle(model, grid, steps=10000):
    """
    Brute-force D-optimal two-point design over the grid nodes.

    Every pair of nodes is tried with weights t, 1 - t on a simplex grid of
    spacing 1 / ``steps``. Returns ``(i, j, t, log_det)`` for the best pair.
    """
    x = design_matrix(model, grid.nodes)
    weights = np.linspace(0.0, 1.0, steps + 1)[1:-1]
    best = (None, None, None, -np.inf)
    for i, j in combinations(range(grid.size), 2):
        outer_i = np.outer(x[i], x[i])
        outer_j = np.outer(x[j], x[j])
        m = weights[:, None, None] * outer_i + (1.0 - weights)[:, None, None] * outer_j
        sign, log_det = np.linalg.slogdet(m)
        log_det = np.where(sign > 0, log_det, -np.inf)
        k = int(np.argmax(log_det))
        if log_det[k] > best[3]:
            best = (i, j, float(weights[k]), float(log_det[k]))
    return best


def setting2_variance(radius):
    """
    The D-sensitivity of the optimal full quadratic design on the unit disc at distance ``radius``.
    """
    r2 = np.asarray(radius) ** 2
    return 6.0 - 9.6 * r2 * (1.0 - r2)
