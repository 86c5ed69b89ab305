"""
CSV import and export for grids, densities, support tables and solver histories.
"""


import logging
import math

import numpy as np
from django.core.files.base import ContentFile
from django.utils.translation import gettext as _
from super_csv.csv_processor import CSVProcessor, ValidationError

from .design import DesignDensity
from .exceptions import ConfigurationError

__all__ = (
    'DensityCSVProcessor', 'GridCSVProcessor', 'HistoryCSVProcessor', 'SupportCSVProcessor',
    'emit_density_csv', 'load_density_csv', 'write_csv',
)

log = logging.getLogger(__name__)

# coordinates are written with enough digits to round-trip exactly
NODE_RTOL = 1e-12
NODE_ATOL = 1e-12


def format_float(value):
    """
    17 significant digits, '.' decimal separator.
    """
    return format(float(value), '.17g')


def coordinate_columns(dimension):
    return [f'w{index}' for index in range(1, dimension + 1)]


class GridCSVProcessor(CSVProcessor):
    """
    One row per grid node: coordinates and cell measure.
    """

    def __init__(self, **kwargs):
        """
        Create a GridCSVProcessor for ``grid``.
        """
        self.grid = None
        super().__init__(**kwargs)
        self.columns = coordinate_columns(self.grid.dimension) + ['measure']

    def get_rows_to_export(self):
        """
        Return iterator of rows for file export.
        """
        names = coordinate_columns(self.grid.dimension)
        for node, measure in zip(self.grid.nodes, self.grid.measures):
            row = dict(zip(names, map(format_float, node)))
            row['measure'] = format_float(measure)
            yield row


class DensityCSVProcessor(CSVProcessor):
    """
    CSV Processor for design densities: coordinates, measure, density and cell mass.

    Export needs ``density``; import needs the ``grid`` the rows must match, node by node.
    """

    max_file_size = 512 * 1024 * 1024

    def __init__(self, **kwargs):
        """
        Create a DensityCSVProcessor.
        """
        self.density = None
        self.grid = None
        super().__init__(**kwargs)
        if self.grid is None and self.density is not None:
            self.grid = self.density.grid
        self.coordinate_columns = coordinate_columns(self.grid.dimension)
        self.columns = self.coordinate_columns + ['measure', 'density', 'mass']
        self.required_columns = self.coordinate_columns + ['density']
        self.values = []
        self._row_num = 0

    def get_rows_to_export(self):
        """
        Return iterator of rows for file export.
        """
        grid = self.density.grid
        for node, measure, value in zip(grid.nodes, grid.measures, self.density.values):
            row = dict(zip(self.coordinate_columns, map(format_float, node)))
            row['measure'] = format_float(measure)
            row['density'] = format_float(value)
            row['mass'] = format_float(value * measure)
            yield row

    def validate_row(self, row):
        """
        Validate a density row against the grid node it belongs to.
        """
        super().validate_row(row)
        index = self._row_num
        self._row_num += 1
        if None in row:
            raise ValidationError(_('Row has more values than the header.'))
        unexpected = sorted(set(row) - set(self.columns))
        if unexpected:
            raise ValidationError(_('Unexpected columns: {}').format(', '.join(unexpected)))
        if index >= self.grid.size:
            raise ValidationError(_('The grid has only {} nodes.').format(self.grid.size))
        try:
            point = [float(row[name]) for name in self.coordinate_columns]
            value = float(row['density'])
        except (TypeError, ValueError) as error:
            raise ValidationError(_('Coordinates and density must be numbers.')) from error
        if not all(math.isfinite(x) for x in point + [value]):
            raise ValidationError(_('Coordinates and density must be finite.'))
        if value < 0:
            raise ValidationError(_('Density must not be negative.'))
        if not np.allclose(point, self.grid.nodes[index], rtol=NODE_RTOL, atol=NODE_ATOL):
            raise ValidationError(_('Row does not match grid node {} at {}.').format(
                index, ', '.join(format_float(c) for c in self.grid.nodes[index])))

    def preprocess_row(self, row):
        """
        Keep the density value of a validated row.
        """
        value = float(row['density'])
        self.values.append(value)
        return {'index': len(self.values) - 1, 'density': value}

    def to_density(self):
        """
        The imported values as a DesignDensity; no renormalization.
        """
        if len(self.values) != self.grid.size:
            raise ConfigurationError(
                _('Density file has {} rows, the grid has {} nodes').format(len(self.values), self.grid.size)
            )
        return DesignDensity(self.grid, self.values)


class SupportCSVProcessor(CSVProcessor):
    """
    One row per support point: location, weight, cell count and peak density.
    """

    def __init__(self, **kwargs):
        """
        Create a SupportCSVProcessor for ``support`` points in ``dimension`` coordinates.
        """
        self.support = ()
        self.dimension = None
        super().__init__(**kwargs)
        self.columns = coordinate_columns(self.dimension) + ['weight', 'n_cells', 'peak_density']

    def get_rows_to_export(self):
        names = coordinate_columns(self.dimension)
        for point in self.support:
            row = dict(zip(names, map(format_float, point.location)))
            row.update({
                'weight': format_float(point.weight),
                'n_cells': point.n_cells,
                'peak_density': format_float(point.peak_density),
            })
            yield row


class HistoryCSVProcessor(CSVProcessor):
    """
    Iteration history of a solve.
    """

    columns = ['iter', 'criterion', 'l1_step', 'kl_step', 'cert_gap', 'wall_time_ms', 'min_density', 'mass_error']

    def __init__(self, **kwargs):
        """
        Create a HistoryCSVProcessor for ``history`` records.
        """
        self.history = ()
        super().__init__(**kwargs)

    def get_rows_to_export(self):
        for record in self.history:
            yield {
                'iter': record.iter,
                'criterion': format_float(record.criterion_value),
                'l1_step': format_float(record.l1_step),
                'kl_step': format_float(record.kl_step),
                'cert_gap': format_float(record.cert_gap),
                'wall_time_ms': format_float(record.wall_time * 1000.0),
                'min_density': format_float(record.min_density),
                'mass_error': format_float(record.mass_error),
            }


def render_csv(processor):
    """
    The processor's export as one string, header first.
    """
    return ''.join(processor.get_iterator())


def write_csv(processor, path):
    """
    Write the processor's export to ``path`` as UTF-8.
    """
    with open(path, 'w', encoding='utf-8', newline='') as out:
        for line in processor.get_iterator():
            out.write(line)
    log.debug('Wrote %s', path)
    return path


def emit_density_csv(f, grid, path):
    """
    Dump a density for plotting: coordinates, mu_i, f_i and f_i mu_i per node.
    """
    if f.grid is not grid:
        f = DesignDensity(grid, f.values)
    return write_csv(DensityCSVProcessor(density=f), path)


def load_density_csv(path, grid):
    """
    Read a density written by ``emit_density_csv`` back onto ``grid``.

    Every row is validated; any error aborts the import with all messages.
    """
    try:
        with open(path, 'rb') as source:
            data = source.read()
    except OSError as error:
        raise ConfigurationError(_('Cannot read density file: {}').format(error.strerror), filename=path) from error
    processor = DensityCSVProcessor(grid=grid)
    processor.process_file(ContentFile(data, name=str(path)))
    if processor.error_messages:
        messages = processor.status()['error_messages']
        raise ConfigurationError('; '.join(str(message) for message in messages), filename=path)
    density = processor.to_density()
    log.info('Loaded density with %d nodes from %s; mass error %.3e', grid.size, path, density.mass_error)
    return density
