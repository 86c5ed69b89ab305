"""
The four reference problems and their known optimal weights.

Settings 1 and 2 live on the unit disc, settings 3 and 4 on the square and
cube [-1, 1]^d. Box presets use the vertex rule so the theoretical support
points (corners, edge midpoints, face centers, center) are grid nodes.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.utils.translation import gettext as _
from django.utils.translation import gettext_lazy

from .basis import FULL_QUADRATIC, LINEAR_NO_INTERCEPT, design_matrix, model_from_config
from .certification import outer_band, ring_masses, ring_uniformity
from .design import Criterion, InfoMatrix, criterion_value, criterion_value_of
from .exceptions import UnknownPreset
from .regions import DEFAULT_DISC_RESOLUTION, MIDPOINT, VERTEX, Region

log = logging.getLogger(__name__)

# rings closer to the disc center than this share of the radius hold the center cluster
CENTER_RADIUS = 0.5
# relative criterion tolerance when orbit weights are not unique
VALUE_TOLERANCE = 1e-3
# outer ring share required of setting 1
RING_MASS = 0.99
# (sectors, largest relative sector deviation) for ring checks
RING_SECTORS = {'setting1': (8, 0.01), 'setting2': (12, 0.02)}

# box orbit labels indexed by the number of coordinates at +-1
ORBITS = {
    2: ('center', 'edge midpoint', 'corner'),
    3: ('center', 'face center', 'edge midpoint', 'corner'),
}


@dataclass(frozen=True)
class ComparisonRow:
    """
    A computed value next to its expected value; ``deviation`` defaults to the absolute difference.

    Informational rows are reported but never fail a comparison.
    """

    label: str
    computed: float
    expected: float
    tolerance: float
    deviation: Optional[float] = None
    informational: bool = False

    def __post_init__(self):
        if self.deviation is None:
            object.__setattr__(self, 'deviation', abs(self.computed - self.expected))

    @property
    def passed(self):
        return self.informational or self.deviation <= self.tolerance

    def to_dict(self):
        return {
            'label': self.label,
            'computed': float(self.computed),
            'expected': float(self.expected),
            'deviation': float(self.deviation),
            'tolerance': float(self.tolerance),
            'passed': self.passed,
            'informational': self.informational,
        }


@dataclass(frozen=True)
class Preset:
    """
    A named model/region pair with default grid settings and expected weights.

    ``weights`` maps a criterion to an ordered mapping of orbit label to the
    weight of each point in that orbit. ``check`` selects how a solved
    density is compared: ``orbits`` (box support points), ``criterion``
    (criterion value against the tabulated design, for boxes whose optimal
    orbit weights are not unique), ``disc-split`` (center cluster against
    boundary band) or ``ring`` (qualitative).
    """

    name: str
    description: str
    model: dict
    region: Region
    resolution: tuple
    rule: str
    check: str
    tolerance: float
    weights: dict = field(default_factory=dict)
    max_iters: int = 20000

    def has_table(self, criterion):
        if self.check == 'ring':
            return True
        return Criterion.parse(criterion) in self.weights


PRESETS = OrderedDict((preset.name, preset) for preset in (
    Preset(
        name='setting1',
        description=gettext_lazy('Linear model without intercept on the unit disc'),
        model={'basis': LINEAR_NO_INTERCEPT, 'dimension': 2},
        region=Region.disc((0.0, 0.0), 1.0),
        resolution=DEFAULT_DISC_RESOLUTION,
        rule=MIDPOINT,
        check='ring',
        tolerance=0.01,
    ),
    Preset(
        name='setting2',
        description=gettext_lazy('Full quadratic model on the unit disc'),
        model={'basis': FULL_QUADRATIC, 'dimension': 2},
        region=Region.disc((0.0, 0.0), 1.0),
        resolution=DEFAULT_DISC_RESOLUTION,
        rule=MIDPOINT,
        check='disc-split',
        tolerance=0.01,
        weights={Criterion.D: OrderedDict([('center', 1 / 6), ('boundary', 5 / 6)])},
    ),
    Preset(
        name='setting3',
        description=gettext_lazy('Full quadratic model on the square [-1, 1]^2'),
        model={'basis': FULL_QUADRATIC, 'dimension': 2},
        region=Region.box([(-1.0, 1.0)] * 2),
        resolution=(41,),
        rule=VERTEX,
        check='orbits',
        tolerance=0.002,
        weights={
            Criterion.D: OrderedDict([('corner', 0.1457), ('edge midpoint', 0.0803), ('center', 0.0960)]),
            Criterion.A: OrderedDict([('corner', 0.0940), ('edge midpoint', 0.0978), ('center', 0.2332)]),
        },
    ),
    Preset(
        name='setting4',
        description=gettext_lazy('Full quadratic model on the cube [-1, 1]^3'),
        model={'basis': FULL_QUADRATIC, 'dimension': 3},
        region=Region.box([(-1.0, 1.0)] * 3),
        resolution=(21,),
        rule=VERTEX,
        check='criterion',
        tolerance=0.003,
        weights={
            Criterion.D: OrderedDict([
                ('corner', 0.0684), ('edge midpoint', 0.0262), ('face center', 0.0183), ('center', 0.0290),
            ]),
            Criterion.A: OrderedDict([
                ('corner', 0.0402), ('edge midpoint', 0.0259), ('face center', 0.0430), ('center', 0.1096),
            ]),
        },
    ),
))


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError as error:
        raise UnknownPreset(
            _('Unknown preset {!r}; choose one of {}').format(name, ', '.join(PRESETS))
        ) from error


def list_presets():
    """
    One summary dict per preset, in presentation order.
    """
    return [
        {
            'name': preset.name,
            'description': str(preset.description),
            'model': preset.model,
            'region': preset.region.kind,
            'resolution': list(preset.resolution),
            'rule': preset.rule,
            'tables': [c.value for c in Criterion if c in preset.weights] or (
                ['D', 'A'] if preset.check == 'ring' else []
            ),
        }
        for preset in PRESETS.values()
    ]


def orbit_label(location, dimension):
    """
    Orbit of a box support point by how many coordinates sit at +-1.
    """
    at_face = int(np.sum(np.abs(np.asarray(location)) > 0.5))
    return ORBITS[dimension][at_face]


def _compare_orbits(preset, table, support, informational=False):
    dimension = preset.region.dimension
    rows = []
    for point in support:
        label = orbit_label(point.location, dimension)
        rows.append(ComparisonRow(
            label=f'{label} ({", ".join(f"{c:+.3f}" for c in point.location)})',
            computed=point.weight,
            expected=table[label],
            tolerance=preset.tolerance,
            informational=informational,
        ))
    expected_count = 3 ** dimension
    if len(support) != expected_count:
        log.warning('%s: found %d support points, expected %d', preset.name, len(support), expected_count)
        rows.append(ComparisonRow(
            'support points', float(len(support)), float(expected_count), 0.0, informational=informational,
        ))
    return rows


def table_design(preset, criterion):
    """
    The tabulated design of a box preset as (points, weights) over the 3^d lattice.

    The rounded table weights are renormalized to sum to 1.
    """
    dimension = preset.region.dimension
    table = preset.weights[Criterion.parse(criterion)]
    lattice = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * dimension, indexing='ij')).reshape(dimension, -1).T
    weights = np.array([table[orbit_label(point, dimension)] for point in lattice])
    return lattice, weights / np.sum(weights)


def table_value(preset, criterion):
    """
    Criterion value of the tabulated design.
    """
    points, weights = table_design(preset, criterion)
    x = design_matrix(model_from_config(preset.model), points)
    return criterion_value_of(criterion, InfoMatrix((x * weights[:, None]).T @ x))


def _compare_criterion(preset, criterion, support, f, grid):
    expected = table_value(preset, criterion)
    computed = criterion_value(criterion, f, grid, model_from_config(preset.model))
    rows = [ComparisonRow(
        'criterion value', computed, expected, VALUE_TOLERANCE,
        deviation=abs(computed - expected) / abs(expected),
    )]
    # several orbit weightings reach the same optimum; the table lists one of them
    return rows + _compare_orbits(preset, preset.weights[criterion], support, informational=True)


def _uniformity_row(preset, f, grid):
    sectors, tolerance = RING_SECTORS[preset.name]
    uniformity = ring_uniformity(f, grid, sectors)
    return ComparisonRow(f'ring uniformity ({sectors} sectors)', uniformity, 0.0, tolerance)


def center_mass(f, grid):
    """
    Mass on the rings within ``CENTER_RADIUS`` of the disc radius.

    Cells are classified by where they lie, so a ring cluster whose centroid
    falls on the center is not counted.
    """
    inner = grid.polar.radii < CENTER_RADIUS * grid.region.radius
    return float(np.sum(ring_masses(f, grid)[inner]))


def _compare_disc_split(preset, table, f, grid):
    _band, boundary = outer_band(f, grid)
    return [
        ComparisonRow('center', center_mass(f, grid), table['center'], preset.tolerance),
        ComparisonRow('boundary', boundary, table['boundary'], preset.tolerance),
        _uniformity_row(preset, f, grid),
    ]


def _compare_ring(preset, f, grid):
    outer = float(ring_masses(f, grid)[-1])
    return [
        # only a shortfall below the required share counts
        ComparisonRow('outer ring mass', outer, RING_MASS, 0.0, deviation=max(0.0, RING_MASS - outer)),
        _uniformity_row(preset, f, grid),
    ]


def compare(preset, criterion, support, f, grid):
    """
    Comparison rows of a solved density against the preset's expected values.

    Returns ``(rows, passed)``; ``rows`` is empty when the preset has no
    table for ``criterion``. Informational rows never fail the comparison.
    """
    criterion = Criterion.parse(criterion)
    if not preset.has_table(criterion):
        return [], True
    if preset.check == 'orbits':
        rows = _compare_orbits(preset, preset.weights[criterion], support)
    elif preset.check == 'criterion':
        rows = _compare_criterion(preset, criterion, support, f, grid)
    elif preset.check == 'disc-split':
        rows = _compare_disc_split(preset, preset.weights[criterion], f, grid)
    else:
        rows = _compare_ring(preset, f, grid)
    passed = all(row.passed for row in rows)
    worst = max((row.deviation for row in rows if not row.informational), default=0.0)
    if passed:
        log.info('%s %s matches the expected values; largest deviation %.4g', preset.name, criterion.value, worst)
    else:
        log.warning('%s %s deviates from the expected values by up to %.4g',
                    preset.name, criterion.value, worst)
    return rows, passed
