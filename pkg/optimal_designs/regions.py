"""
Design regions and the positive-weight quadrature grids laid over them.

Every integral over a region E is approximated as sum_i g(w_i) mu_i on a
``QuadratureGrid``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.utils.translation import gettext as _
from scipy import sparse

from .conf import get_setting
from .exceptions import ConfigurationError, GridTooLarge, GridTooSmall, InvalidRegion

log = logging.getLogger(__name__)

BOX = 'box'
DISC = 'disc'

MIDPOINT = 'midpoint'
VERTEX = 'vertex'
RULES = (MIDPOINT, VERTEX)

DEFAULT_DISC_RESOLUTION = (80, 160)


def default_box_resolution(d):
    """
    Nodes per dimension used when a box config gives none.
    """
    if d <= 2:
        return 41
    if d == 3:
        return 21
    return 11


@dataclass(frozen=True)
class Region:
    """
    A closed box (per-dimension intervals) or a disc in the plane.
    """

    kind: str
    intervals: tuple = ()
    center: tuple = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == BOX:
            intervals = tuple((float(a), float(b)) for a, b in self.intervals)
            if not intervals:
                raise InvalidRegion(_('A box needs at least one interval.'))
            for a, b in intervals:
                if not a < b:
                    raise InvalidRegion(_('Box interval [{}, {}] is empty.').format(a, b))
            object.__setattr__(self, 'intervals', intervals)
        elif self.kind == DISC:
            center = tuple(float(c) for c in self.center)
            if len(center) != 2:
                raise InvalidRegion(_('A disc center needs two coordinates, got {}').format(len(center)))
            if not self.radius > 0:
                raise InvalidRegion(_('Disc radius must be positive, got {}').format(self.radius))
            object.__setattr__(self, 'center', center)
            object.__setattr__(self, 'radius', float(self.radius))
        else:
            raise InvalidRegion(_('Unknown region kind {!r}').format(self.kind))

    @classmethod
    def box(cls, intervals):
        return cls(kind=BOX, intervals=tuple(intervals))

    @classmethod
    def disc(cls, center=(0.0, 0.0), radius=1.0):
        return cls(kind=DISC, center=tuple(center), radius=radius)

    @property
    def dimension(self):
        return len(self.intervals) if self.kind == BOX else 2

    def volume(self):
        return region_volume(self)

    def contains(self, points, atol=1e-12):
        """
        Boolean mask of the rows of ``points`` lying in the region (up to ``atol``).
        """
        points = np.atleast_2d(points)
        if self.kind == BOX:
            lower = np.array([a for a, _b in self.intervals])
            upper = np.array([b for _a, b in self.intervals])
            return np.all((points >= lower - atol) & (points <= upper + atol), axis=1)
        offsets = points - np.asarray(self.center)
        return np.hypot(offsets[:, 0], offsets[:, 1]) <= self.radius + atol


def region_volume(region):
    """
    Box: product of the interval lengths. Disc: pi r^2.
    """
    if region.kind == BOX:
        return float(np.prod([b - a for a, b in region.intervals]))
    return math.pi * region.radius ** 2


@dataclass(frozen=True, eq=False)
class PolarLayout:
    """
    Ring/sector indexing of a polar disc grid; node index = ring * n_theta + sector.
    """

    n_r: int
    n_theta: int
    radii: np.ndarray
    angles: np.ndarray

    @property
    def d_theta(self):
        return 2 * math.pi / self.n_theta


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """
    Nodes, positive cell measures, and cell adjacency over a region.

    Arrays are read-only; a grid is safe to share.
    """

    region: Region
    nodes: np.ndarray
    measures: np.ndarray
    adjacency: sparse.csr_matrix
    rule: str
    resolution: tuple
    polar: Optional[PolarLayout] = None
    total_measure: float = field(init=False)

    def __post_init__(self):
        for array in (self.nodes, self.measures):
            array.setflags(write=False)
        object.__setattr__(self, 'total_measure', float(np.sum(self.measures)))

    @property
    def dimension(self):
        return self.nodes.shape[1]

    @property
    def size(self):
        return self.nodes.shape[0]

    def neighbors(self, index):
        """
        Indices of the nodes adjacent to ``index``.
        """
        start, stop = self.adjacency.indptr[index], self.adjacency.indptr[index + 1]
        return self.adjacency.indices[start:stop]

    def integrate(self, values):
        """
        sum_i values_i mu_i.
        """
        return float(np.sum(np.asarray(values) * self.measures))


def _check_node_count(count):
    cap = int(get_setting('MAX_GRID_NODES'))
    if count > cap:
        raise GridTooLarge(_('Grid would have {} nodes, more than the cap of {}').format(count, cap))


def _symmetric_adjacency(first, second, size):
    """
    Build a symmetric 0/1 adjacency matrix from undirected edges (first[k], second[k]).
    """
    rows = np.concatenate([first, second])
    cols = np.concatenate([second, first])
    data = np.ones(rows.shape[0], dtype=np.int8)
    adjacency = sparse.coo_matrix((data, (rows, cols)), shape=(size, size)).tocsr()
    adjacency.sum_duplicates()
    adjacency.data[:] = 1
    return adjacency


def _axis_nodes(a, b, n, rule):
    """
    One-dimensional nodes and weights for either rule; weights sum to b - a exactly.
    """
    if rule == MIDPOINT:
        width = (b - a) / n
        return a + (np.arange(n) + 0.5) * width, np.full(n, width)
    width = (b - a) / (n - 1)
    nodes = a + np.arange(n) * width
    nodes[-1] = b
    weights = np.full(n, width)
    weights[0] = weights[-1] = width / 2
    return nodes, weights


def grid_box(intervals, n_per_dim, rule=MIDPOINT):
    """
    Tensor grid over a box, ``n_per_dim`` nodes per dimension.

    ``midpoint`` puts nodes at cell centers with equal cell volumes;
    ``vertex`` puts nodes on the lattice including the box faces, with
    trapezoid cell measures. Both sum to the box volume.
    """
    region = Region.box(intervals)
    if rule not in RULES:
        raise ConfigurationError(_('Unknown quadrature rule {!r}').format(rule))
    if n_per_dim < 2:
        raise GridTooSmall(_('Need at least 2 nodes per dimension, got {}').format(n_per_dim))
    d = region.dimension
    _check_node_count(n_per_dim ** d)

    axes = [_axis_nodes(a, b, n_per_dim, rule) for a, b in region.intervals]
    mesh = np.meshgrid(*[nodes for nodes, _weights in axes], indexing='ij')
    nodes = np.stack([coordinate.ravel() for coordinate in mesh], axis=1)
    measures = axes[0][1]
    for _nodes, weights in axes[1:]:
        measures = np.multiply.outer(measures, weights)
    measures = np.asarray(measures, dtype=float).ravel()

    shape = (n_per_dim,) * d
    index = np.arange(nodes.shape[0]).reshape(shape)
    first, second = [], []
    for axis in range(d):
        first.append(np.take(index, np.arange(n_per_dim - 1), axis=axis).ravel())
        second.append(np.take(index, np.arange(1, n_per_dim), axis=axis).ravel())
    adjacency = _symmetric_adjacency(np.concatenate(first), np.concatenate(second), nodes.shape[0])

    log.debug('Built %s box grid with %d nodes over %s', rule, nodes.shape[0], region.intervals)
    return QuadratureGrid(
        region=region,
        nodes=nodes,
        measures=measures,
        adjacency=adjacency,
        rule=rule,
        resolution=(n_per_dim,),
    )


def grid_disc(center, radius, n_r, n_theta):
    """
    Polar midpoint grid over a disc.

    Ring k has radius (k + 1/2) dr and sector l angle (l + 1/2) dtheta; the
    cell measure r_k dr dtheta sums to pi radius^2.
    """
    region = Region.disc(center, radius)
    if n_r < 2 or n_theta < 4:
        raise GridTooSmall(_('A disc grid needs n_r >= 2 and n_theta >= 4, got {} x {}').format(n_r, n_theta))
    _check_node_count(n_r * n_theta)

    d_r = region.radius / n_r
    d_theta = 2 * math.pi / n_theta
    radii = (np.arange(n_r) + 0.5) * d_r
    angles = (np.arange(n_theta) + 0.5) * d_theta
    ring, sector = np.meshgrid(np.arange(n_r), np.arange(n_theta), indexing='ij')
    ring = ring.ravel()
    sector = sector.ravel()
    nodes = np.stack([
        region.center[0] + radii[ring] * np.cos(angles[sector]),
        region.center[1] + radii[ring] * np.sin(angles[sector]),
    ], axis=1)
    measures = radii[ring] * d_r * d_theta

    index = np.arange(n_r * n_theta).reshape(n_r, n_theta)
    radial_first = index[:-1, :].ravel()
    radial_second = index[1:, :].ravel()
    angular_first = index.ravel()
    angular_second = np.roll(index, -1, axis=1).ravel()
    adjacency = _symmetric_adjacency(
        np.concatenate([radial_first, angular_first]),
        np.concatenate([radial_second, angular_second]),
        n_r * n_theta,
    )

    log.debug('Built polar disc grid %d x %d around %s, radius %s', n_r, n_theta, region.center, region.radius)
    return QuadratureGrid(
        region=region,
        nodes=nodes,
        measures=measures,
        adjacency=adjacency,
        rule=MIDPOINT,
        resolution=(n_r, n_theta),
        polar=PolarLayout(n_r=n_r, n_theta=n_theta, radii=radii, angles=angles),
    )


def grid_from_region(region, resolution=None, rule=MIDPOINT):
    """
    Dispatch a region to the matching grid constructor.

    ``resolution`` is ``n_per_dim`` for a box and ``(n_r, n_theta)`` for a disc;
    ``None`` selects the defaults.
    """
    if region.kind == BOX:
        n_per_dim = resolution if resolution is not None else default_box_resolution(region.dimension)
        if isinstance(n_per_dim, (tuple, list)):
            (n_per_dim,) = n_per_dim
        return grid_box(region.intervals, int(n_per_dim), rule=rule)
    n_r, n_theta = resolution if resolution is not None else DEFAULT_DISC_RESOLUTION
    return grid_disc(region.center, region.radius, int(n_r), int(n_theta))


def refine(grid, factor=2):
    """
    The same region and rule at ``factor`` times the resolution.
    """
    if grid.polar is not None:
        return grid_disc(grid.region.center, grid.region.radius, grid.polar.n_r * factor, grid.polar.n_theta * factor)
    (n_per_dim,) = grid.resolution
    if grid.rule == VERTEX:
        return grid_box(grid.region.intervals, (n_per_dim - 1) * factor + 1, rule=VERTEX)
    return grid_box(grid.region.intervals, n_per_dim * factor, rule=MIDPOINT)
