"""
Monomial regression bases: the regressor map w -> x(w) of a linear model.
"""

import logging
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from django.utils.translation import gettext as _

from .conf import get_setting
from .exceptions import ConfigurationError, DimensionMismatch, DimensionOutOfRange

log = logging.getLogger(__name__)

FULL_QUADRATIC = 'full-quadratic'
LINEAR_NO_INTERCEPT = 'linear-no-intercept'


@dataclass(frozen=True)
class MonomialTerm:
    """
    A single monomial prod_j w_j ** exponents[j].
    """

    exponents: tuple

    def __post_init__(self):
        exponents = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exponents):
            raise ValueError(_('Monomial exponents must be nonnegative: {}').format(exponents))
        object.__setattr__(self, 'exponents', exponents)

    @property
    def degree(self):
        return sum(self.exponents)

    def label(self):
        """
        Human readable form, e.g. ``w1^2`` or ``w1*w2``; the constant term is ``1``.
        """
        factors = []
        for index, power in enumerate(self.exponents, 1):
            if power == 1:
                factors.append(f'w{index}')
            elif power > 1:
                factors.append(f'w{index}^{power}')
        return '*'.join(factors) or '1'


@dataclass(frozen=True)
class ModelSpec:
    """
    An ordered list of distinct monomial terms over a d-dimensional design space.
    """

    dimension: int
    terms: tuple

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionOutOfRange(_('Design space dimension must be at least 1, got {}').format(self.dimension))
        terms = tuple(t if isinstance(t, MonomialTerm) else MonomialTerm(tuple(t)) for t in self.terms)
        if not terms:
            raise ConfigurationError(_('A model needs at least one term.'))
        for term in terms:
            if len(term.exponents) != self.dimension:
                raise DimensionMismatch(
                    _('Term {} has {} exponents, expected {}').format(
                        term.exponents, len(term.exponents), self.dimension
                    )
                )
        if len(set(terms)) != len(terms):
            raise ConfigurationError(_('Model terms must be pairwise distinct.'))
        object.__setattr__(self, 'terms', terms)

    @property
    def p(self):
        return len(self.terms)

    @property
    def exponent_matrix(self):
        """
        (p, d) integer array of exponents.
        """
        return np.array([term.exponents for term in self.terms], dtype=np.int64).reshape(self.p, self.dimension)

    def describe(self):
        return ' + '.join(term.label() for term in self.terms)


def _check_dimension(d):
    if d < 1:
        raise DimensionOutOfRange(_('Design space dimension must be at least 1, got {}').format(d))
    soft_limit = get_setting('MAX_SOFT_DIMENSION')
    if d > soft_limit:
        log.warning('Dimension %d exceeds the soft limit of %d; grids grow as n**d', d, soft_limit)


def full_quadratic_basis(d):
    """
    All monomials of total degree <= 2 in d variables.

    Ordered as the constant, the linear terms in index order, then the
    degree-2 terms in graded-lexicographic order, so p = (d + 1)(d + 2) / 2.
    """
    _check_dimension(d)
    terms = [(0,) * d]
    for j in range(d):
        exponents = [0] * d
        exponents[j] = 1
        terms.append(tuple(exponents))
    for i, j in combinations_with_replacement(range(d), 2):
        exponents = [0] * d
        exponents[i] += 1
        exponents[j] += 1
        terms.append(tuple(exponents))
    return ModelSpec(dimension=d, terms=tuple(MonomialTerm(t) for t in terms))


def linear_basis_no_intercept(d):
    """
    The terms w_1, ..., w_d.
    """
    _check_dimension(d)
    terms = []
    for j in range(d):
        exponents = [0] * d
        exponents[j] = 1
        terms.append(MonomialTerm(tuple(exponents)))
    return ModelSpec(dimension=d, terms=tuple(terms))


def eval_regressor(model, w):
    """
    Evaluate x(w) for a single point; 0 ** 0 is 1.
    """
    point = np.asarray(w, dtype=float).reshape(-1)
    if point.shape[0] != model.dimension:
        raise DimensionMismatch(
            _('Point has {} coordinates, the model expects {}').format(point.shape[0], model.dimension)
        )
    return design_matrix(model, point[np.newaxis, :])[0]


def design_matrix(model, nodes):
    """
    Evaluate x(w_i) for every row of ``nodes``; returns an (n, p) array.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != model.dimension:
        raise DimensionMismatch(
            _('Nodes have shape {}, the model expects {} coordinates').format(nodes.shape, model.dimension)
        )
    exponents = model.exponent_matrix
    # (n, 1, d) ** (p, d) -> (n, p, d), then product over coordinates
    return np.prod(nodes[:, np.newaxis, :] ** exponents[np.newaxis, :, :], axis=2)


def model_from_config(value, dimension=None):
    """
    Build a model from its config form.

    Accepts ``{'basis': 'full-quadratic', 'dimension': 2}``, the same with
    ``linear-no-intercept``, or ``{'terms': [[0, 0], [1, 0], ...]}``.
    """
    if not isinstance(value, dict):
        raise ConfigurationError(_('model must be a mapping, got {!r}').format(value))
    unknown = set(value) - {'basis', 'dimension', 'terms'}
    if unknown:
        raise ConfigurationError(_('Unknown model keys: {}').format(', '.join(sorted(unknown))))
    if 'terms' in value:
        terms = value['terms']
        if not terms:
            raise ConfigurationError(_('model.terms must list at least one exponent vector'))
        d = value.get('dimension', dimension) or len(terms[0])
        return ModelSpec(dimension=int(d), terms=tuple(MonomialTerm(tuple(t)) for t in terms))
    basis = value.get('basis')
    d = value.get('dimension', dimension)
    if d is None:
        raise ConfigurationError(_('model.dimension is required with model.basis'))
    if basis == FULL_QUADRATIC:
        return full_quadratic_basis(int(d))
    if basis == LINEAR_NO_INTERCEPT:
        return linear_basis_no_intercept(int(d))
    raise ConfigurationError(_('Unknown model basis {!r}').format(basis))


def model_to_config(model):
    """
    Inverse of ``model_from_config``; keyword form when the model is a named basis.
    """
    for basis, factory in ((FULL_QUADRATIC, full_quadratic_basis), (LINEAR_NO_INTERCEPT, linear_basis_no_intercept)):
        if model == factory(model.dimension):
            return {'basis': basis, 'dimension': model.dimension}
    return {'dimension': model.dimension, 'terms': [list(term.exponents) for term in model.terms]}
