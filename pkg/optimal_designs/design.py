"""
Design densities, information matrices, criteria and sensitivity functions.
"""

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from django.utils.translation import gettext as _
from scipy import linalg

from .basis import design_matrix
from .exceptions import DimensionMismatch, SingularInformation

log = logging.getLogger(__name__)

# min eigenvalue / max eigenvalue below this is treated as singular
SINGULARITY_RATIO = 1e-12
# each cached entry pins an (n, p(p + 1) / 2) products array
REGRESSOR_CACHE_SIZE = 2


class Criterion(str, enum.Enum):
    D = 'D'
    A = 'A'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError as error:
            raise ValueError(_('Unknown criterion {!r}; expected D or A').format(value)) from error


class DesignDensity:
    """
    Nonnegative density values f_i aligned with the nodes of a grid.

    The normalization sum_i f_i mu_i = 1 is reported by ``mass_error``
    rather than enforced, so imported or intermediate densities can be inspected.
    """

    __slots__ = ('grid', 'values')

    def __init__(self, grid, values):
        values = np.array(values, dtype=float).reshape(-1)
        if values.shape[0] != grid.size:
            raise DimensionMismatch(
                _('Density has {} values, the grid has {} nodes').format(values.shape[0], grid.size)
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(_('Density values must be finite.'))
        if np.any(values < 0):
            raise ValueError(_('Density values must be nonnegative.'))
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @classmethod
    def from_masses(cls, grid, masses):
        """
        Density whose cell masses f_i mu_i are proportional to ``masses``.
        """
        masses = np.asarray(masses, dtype=float)
        return cls(grid, masses / np.sum(masses) / grid.measures)

    @property
    def masses(self):
        """
        Cell masses f_i mu_i.
        """
        return self.values * self.grid.measures

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    @property
    def mass_error(self):
        return abs(self.total_mass - 1.0)

    def __repr__(self):
        return f'DesignDensity(nodes={self.grid.size}, mass={self.total_mass!r})'


@dataclass(frozen=True, eq=False)
class InfoMatrix:
    """
    M(f) = sum_i f_i mu_i x(w_i) x(w_i)^T with its Cholesky factor.

    ``factor`` is the lower-triangular L with M = L L^T; M^{-1} is never formed.
    """

    m: np.ndarray
    factor: np.ndarray = field(init=False)
    log_det: float = field(init=False)
    inv_trace: float = field(init=False)

    def __post_init__(self):
        m = self.m
        eigenvalues = np.linalg.eigvalsh(m)
        if eigenvalues[-1] <= 0 or eigenvalues[0] <= SINGULARITY_RATIO * eigenvalues[-1]:
            raise SingularInformation(
                _('Information matrix is singular (eigenvalue ratio {:.3e}); '
                  'the regressors do not span R^{} on the support of the density').format(
                    eigenvalues[0] / eigenvalues[-1] if eigenvalues[-1] > 0 else 0.0, m.shape[0]
                )
            )
        try:
            factor = linalg.cholesky(m, lower=True)
        except linalg.LinAlgError as error:
            raise SingularInformation(_('Information matrix is not positive definite.')) from error
        inverse_factor = linalg.solve_triangular(factor, np.eye(m.shape[0]), lower=True)
        object.__setattr__(self, 'factor', factor)
        object.__setattr__(self, 'log_det', float(2.0 * np.sum(np.log(np.diag(factor)))))
        object.__setattr__(self, 'inv_trace', float(np.sum(inverse_factor ** 2)))

    @property
    def p(self):
        return self.m.shape[0]

    def whiten(self, columns):
        """
        L^{-1} columns: one forward substitution per column.
        """
        return linalg.solve_triangular(self.factor, columns, lower=True, check_finite=False)

    def solve(self, columns):
        """
        M^{-1} columns via both triangular solves.
        """
        return linalg.cho_solve((self.factor, True), columns, check_finite=False)


@dataclass(frozen=True, eq=False)
class Regressors:
    """
    x(w_i) for every grid node, and the pairwise products feeding M(f).
    """

    x: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    products: np.ndarray


@lru_cache(maxsize=REGRESSOR_CACHE_SIZE)
def regressors(grid, model):
    """
    Evaluate the model on the grid once; only the latest (grid, model) pairs stay cached.
    """
    if grid.dimension != model.dimension:
        raise DimensionMismatch(
            _('Grid dimension {} does not match model dimension {}').format(grid.dimension, model.dimension)
        )
    x = design_matrix(model, grid.nodes)
    rows, cols = np.triu_indices(model.p)
    # (k, n) contiguous so each entry reduces along a contiguous axis
    products = np.ascontiguousarray((x[:, rows] * x[:, cols]).T)
    for array in (x, products):
        array.setflags(write=False)
    return Regressors(x=x, rows=rows, cols=cols, products=products)


def uniform_density(grid):
    """
    f_i = 1 / |E| on every node.
    """
    return DesignDensity(grid, np.full(grid.size, 1.0 / grid.total_measure))


def info_matrix(f, grid, model):
    """
    Information matrix of ``f``; raises SingularInformation when not positive definite.

    Entries are reduced over nodes in index order with numpy's pairwise
    summation, so identical inputs give bitwise identical matrices.
    """
    reg = regressors(grid, model)
    masses = f.values * grid.measures
    upper = np.sum(reg.products * masses, axis=1)
    m = np.empty((model.p, model.p))
    m[reg.rows, reg.cols] = upper
    m[reg.cols, reg.rows] = upper
    return InfoMatrix(m)


def _by_chunks(function, columns, threads):
    """
    Apply a column-wise ``function`` to ``columns`` in contiguous chunks.
    """
    if threads <= 1 or columns.shape[1] < 2 * threads:
        return function(columns)
    bounds = np.linspace(0, columns.shape[1], threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(function, [columns[:, start:stop] for start, stop in zip(bounds[:-1], bounds[1:])])
        return np.concatenate(list(parts))


def d_sensitivity(f, grid, model, info=None, threads=1):
    """
    phi_i = x(w_i)^T M^{-1} x(w_i), from the Cholesky factor of M(f).
    """
    info = info if info is not None else info_matrix(f, grid, model)
    x = regressors(grid, model).x

    def variance(columns):
        return np.sum(info.whiten(columns) ** 2, axis=0)

    return _by_chunks(variance, x.T, threads)


def a_sensitivity(f, grid, model, info=None, threads=1):
    """
    psi_i = ||M^{-1} x(w_i)||^2 / tr(M^{-1}).
    """
    info = info if info is not None else info_matrix(f, grid, model)
    x = regressors(grid, model).x

    def scaled_norm(columns):
        return np.sum(info.solve(columns) ** 2, axis=0)

    return _by_chunks(scaled_norm, x.T, threads) / info.inv_trace


def sensitivity(criterion, f, grid, model, info=None, threads=1):
    """
    The sensitivity function of ``criterion``: phi for D, psi for A.
    """
    if Criterion.parse(criterion) is Criterion.D:
        return d_sensitivity(f, grid, model, info=info, threads=threads)
    return a_sensitivity(f, grid, model, info=info, threads=threads)


def criterion_value_of(criterion, info):
    """
    -log det M for D, tr(M^{-1}) for A; both minimized.
    """
    if Criterion.parse(criterion) is Criterion.D:
        return -info.log_det
    return info.inv_trace


def criterion_value(kind, f, grid, model):
    return criterion_value_of(kind, info_matrix(f, grid, model))


def sensitivity_bound(criterion, p):
    """
    Equivalence-theorem bound on the sensitivity: p for D, 1 for A.
    """
    return float(p) if Criterion.parse(criterion) is Criterion.D else 1.0
