"""
Equivalence-theorem certificates and support-point extraction for converged densities.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from django.utils.translation import gettext as _
from scipy.sparse import csgraph

from .conf import get_setting
from .design import Criterion, info_matrix, sensitivity, sensitivity_bound
from .exceptions import DegenerateRing, OptimalDesignError
from .regions import refine as refine_grid

log = logging.getLogger(__name__)

# sum_i f_i mu_i phi_i = p forces max phi >= p; anything lower is a numerical fault
CERTIFICATE_SLACK = 1e-10
# the boundary band must hold at least this share of the mass
MIN_RING_MASS = 0.01


@dataclass(frozen=True)
class Certificate:
    """
    Largest sensitivity over the grid against the equivalence-theorem bound.

    The claim is grid-relative: it bounds suboptimality over the grid nodes only.
    """

    criterion: Criterion
    gap: float
    argmax_node: tuple
    bound: float
    sensitivity_max: float
    grid_nodes: int = 0
    refined_nodes: Optional[int] = None

    @property
    def certified(self):
        return self.gap <= 0.0

    def to_dict(self):
        return {
            'criterion': self.criterion.value,
            'grid_relative': True,
            'gap': self.gap,
            'bound': self.bound,
            'sensitivity_max': self.sensitivity_max,
            'argmax_node': list(self.argmax_node),
            'grid_nodes': self.grid_nodes,
            'refined_nodes': self.refined_nodes,
        }


@dataclass(frozen=True)
class SupportPoint:
    location: tuple
    weight: float
    n_cells: int
    peak_density: float


def _certificate(criterion, sens, grid, bound, **extra):
    index = int(np.argmax(sens))
    sensitivity_max = float(sens[index])
    gap = sensitivity_max - bound
    if gap < -CERTIFICATE_SLACK:
        log.error('%s sensitivity maximum %.17g is below the bound %s', criterion.value, sensitivity_max, bound)
    return Certificate(
        criterion=criterion,
        gap=gap,
        argmax_node=tuple(float(c) for c in grid.nodes[index]),
        bound=bound,
        sensitivity_max=sensitivity_max,
        grid_nodes=grid.size,
        **extra,
    )


def certify(f, grid, model, criterion):
    """
    Certificate of ``f``: max phi against p for D, max psi against 1 for A.
    """
    criterion = Criterion.parse(criterion)
    info = info_matrix(f, grid, model)
    sens = sensitivity(criterion, f, grid, model, info=info, threads=int(get_setting('THREADS')))
    certificate = _certificate(criterion, sens, grid, sensitivity_bound(criterion, model.p))
    log.info('%s certificate: max sensitivity %.10g, bound %s, gap %.3e',
             criterion.value, certificate.sensitivity_max, certificate.bound, certificate.gap)
    return certificate


def certify_refined(f, grid, model, criterion, refine=2):
    """
    Re-evaluate the sensitivity of ``f`` on a grid ``refine`` times finer.

    M(f) stays the one computed on the solve grid; the finer nodes only sample
    the sensitivity between solve nodes. The larger of the two gaps is reported.
    """
    criterion = Criterion.parse(criterion)
    if refine < 1:
        raise OptimalDesignError(_('refine must be at least 1, got {}').format(refine))
    coarse = certify(f, grid, model, criterion)
    fine_grid = refine_grid(grid, refine)
    info = info_matrix(f, grid, model)
    sens = sensitivity(criterion, None, fine_grid, model, info=info, threads=int(get_setting('THREADS')))
    fine = _certificate(criterion, sens, fine_grid, coarse.bound, refined_nodes=fine_grid.size)
    log.info('Refined %s certificate on %d nodes: gap %.3e (solve grid %.3e)',
             criterion.value, fine_grid.size, fine.gap, coarse.gap)
    if coarse.gap > fine.gap:
        return Certificate(
            criterion=criterion,
            gap=coarse.gap,
            argmax_node=coarse.argmax_node,
            bound=coarse.bound,
            sensitivity_max=coarse.sensitivity_max,
            grid_nodes=grid.size,
            refined_nodes=fine_grid.size,
        )
    return Certificate(
        criterion=criterion,
        gap=fine.gap,
        argmax_node=fine.argmax_node,
        bound=fine.bound,
        sensitivity_max=fine.sensitivity_max,
        grid_nodes=grid.size,
        refined_nodes=fine_grid.size,
    )


def extract_support(f, grid, mass_floor=None):
    """
    Group the heavy cells of ``f`` into support points.

    Cells whose mass is at least ``mass_floor`` times the largest cell mass are
    active; connected components of active cells under the grid adjacency
    become support points, sorted by descending weight. Returns the points and
    the residual mass 1 - sum of weights.
    """
    if mass_floor is None:
        mass_floor = float(get_setting('MASS_FLOOR'))
    masses = f.values * grid.measures
    active = np.flatnonzero(masses >= mass_floor * np.max(masses))
    sub = grid.adjacency[active][:, active]
    n_clusters, labels = csgraph.connected_components(sub, directed=False)

    active_masses = masses[active]
    weights = np.bincount(labels, weights=active_masses, minlength=n_clusters)
    counts = np.bincount(labels, minlength=n_clusters)
    centroids = np.stack([
        np.bincount(labels, weights=active_masses * grid.nodes[active, axis], minlength=n_clusters)
        for axis in range(grid.dimension)
    ], axis=1) / weights[:, None]
    peaks = np.zeros(n_clusters)
    np.maximum.at(peaks, labels, f.values[active])

    points = [
        SupportPoint(
            location=tuple(float(c) for c in centroids[label]),
            weight=float(weights[label]),
            n_cells=int(counts[label]),
            peak_density=float(peaks[label]),
        )
        for label in range(n_clusters)
    ]
    points.sort(key=lambda point: (-point.weight, point.location))
    residual = 1.0 - float(np.sum(weights))
    log.info('Extracted %d support points from %d active cells; residual mass %.3e',
             len(points), active.shape[0], residual)
    return points, residual


def _polar(grid):
    if grid.polar is None:
        raise OptimalDesignError(_('Ring statistics need a polar disc grid.'))
    return grid.polar


def ring_masses(f, grid):
    """
    Mass carried by each radial ring of a polar grid, innermost first.
    """
    polar = _polar(grid)
    return (f.values * grid.measures).reshape(polar.n_r, polar.n_theta).sum(axis=1)


def outer_band(f, grid, mass_floor=None):
    """
    Ring slice of the outermost occupied band and the mass it carries.

    The band is the contiguous run of occupied rings ending at the outermost
    occupied ring; a ring is occupied when its mass is at least ``mass_floor``
    times the heaviest ring's.
    """
    if mass_floor is None:
        mass_floor = float(get_setting('MASS_FLOOR'))
    by_ring = ring_masses(f, grid)
    occupied = by_ring >= mass_floor * np.max(by_ring)
    stop = int(np.flatnonzero(occupied)[-1]) + 1
    start = stop
    while start > 0 and occupied[start - 1]:
        start -= 1
    return slice(start, stop), float(np.sum(by_ring[start:stop]))


def _sector_overlap(n_theta, n_sectors):
    """
    (n_theta, n_sectors) share of each grid sector falling inside each equal-angle sector.
    """
    cell_edges = np.arange(n_theta + 1) / n_theta
    sector_edges = np.arange(n_sectors + 1) / n_sectors
    low = np.maximum.outer(cell_edges[:-1], sector_edges[:-1])
    high = np.minimum.outer(cell_edges[1:], sector_edges[1:])
    return np.clip(high - low, 0.0, None) * n_theta


def ring_uniformity(f, grid, n_sectors):
    """
    Largest relative deviation of sector masses on the outer band from their mean.

    Grid sectors straddling a boundary split their mass by angular overlap,
    so ``n_sectors`` need not divide ``n_theta``.
    """
    polar = _polar(grid)
    if n_sectors < 1:
        raise OptimalDesignError(_('n_sectors must be at least 1, got {}').format(n_sectors))
    band, band_mass = outer_band(f, grid)
    total = f.total_mass
    if band_mass < MIN_RING_MASS * total:
        raise DegenerateRing(
            _('The outer band carries {:.3e} of {:.3e} total mass, less than 1%').format(band_mass, total)
        )
    masses = (f.values * grid.measures).reshape(polar.n_r, polar.n_theta)[band].sum(axis=0)
    sectors = masses @ _sector_overlap(polar.n_theta, n_sectors)
    mean = float(np.mean(sectors))
    deviation = float(np.max(np.abs(sectors - mean)) / mean)
    log.debug('Ring uniformity over rings %d-%d, %d sectors: %.3e',
              band.start, band.stop - 1, n_sectors, deviation)
    return deviation
