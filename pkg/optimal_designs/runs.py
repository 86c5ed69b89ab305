"""
Run configuration, preset runs, and the solve -> certify -> extract pipeline.
"""

import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import List, Optional

import yaml
from django.utils.translation import gettext as _

from . import api
from .basis import model_from_config, model_to_config
from .certification import certify, certify_refined, extract_support
from .conf import get_setting
from .design import Criterion
from .exceptions import ConfigurationError, MonotonicityViolation, OptimalDesignError
from .presets import compare, get_preset
from .regions import BOX, DISC, MIDPOINT, RULES, Region, grid_from_region
from .solvers import LINE_SEARCH, STEP_RULES, SolveOptions, TerminationReason, solve, solve_vdm

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEVIATION = 2

MULTIPLICATIVE = 'multiplicative'
VDM = 'vdm'
METHODS = (MULTIPLICATIVE, VDM)

REPORT = 'report'
HISTORY = 'history'
DENSITY = 'density'
SUPPORT = 'support'
EMIT_CHOICES = (REPORT, HISTORY, DENSITY, SUPPORT)

FILENAMES = {
    REPORT: 'report.txt',
    HISTORY: 'history.csv',
    DENSITY: 'density.csv',
    SUPPORT: 'support.csv',
}

TOP_LEVEL_KEYS = ('preset', 'model', 'region', 'criterion', 'solver', 'output')
REGION_KEYS = {
    BOX: ('kind', 'intervals', 'resolution', 'rule'),
    DISC: ('kind', 'center', 'radius', 'resolution'),
}
SOLVER_KEYS = (
    'method', 'max_iters', 'l1_tol', 'cert_tol', 'record_history', 'monotonicity_action',
    'threads', 'step_rule', 'refine', 'mass_floor',
)
OUTPUT_KEYS = ('dir', 'emit')


@dataclass
class RunConfig:
    """
    Everything a single run needs: problem, grid, solver options and outputs.
    """

    model: object
    region: Region
    options: SolveOptions
    resolution: Optional[tuple] = None
    rule: str = MIDPOINT
    method: str = MULTIPLICATIVE
    step_rule: str = LINE_SEARCH
    refine: int = 0
    mass_floor: float = 1e-4
    output_dir: str = 'optdes-out'
    emit: tuple = EMIT_CHOICES
    preset: Optional[str] = None

    def __post_init__(self):
        if self.model.dimension != self.region.dimension:
            raise ConfigurationError(
                _('The model has dimension {}, the region {}').format(self.model.dimension, self.region.dimension)
            )
        if self.rule not in RULES:
            raise ConfigurationError(_('Unknown quadrature rule {!r}').format(self.rule))
        if self.region.kind == DISC and self.rule != MIDPOINT:
            raise ConfigurationError(_('Disc grids only use the midpoint rule.'))
        if self.method not in METHODS:
            raise ConfigurationError(_('Unknown method {!r}; expected one of {}').format(self.method, ', '.join(METHODS)))
        if self.method == VDM and self.options.criterion is not Criterion.D:
            raise ConfigurationError(_('The vdm method only solves the D criterion.'))
        if self.step_rule not in STEP_RULES:
            raise ConfigurationError(_('Unknown step rule {!r}').format(self.step_rule))
        unknown = [name for name in self.emit if name not in EMIT_CHOICES]
        if unknown:
            raise ConfigurationError(_('Unknown outputs: {}').format(', '.join(unknown)))
        if self.resolution is not None:
            self.resolution = tuple(int(n) for n in self.resolution)
        self.emit = tuple(self.emit)

    @property
    def criterion(self):
        return self.options.criterion

    def to_dict(self):
        """
        Plain data for YAML; ``from_dict`` rebuilds an equal config.
        """
        region = {'kind': self.region.kind}
        if self.region.kind == BOX:
            region['intervals'] = [list(interval) for interval in self.region.intervals]
            region['rule'] = self.rule
        else:
            region['center'] = list(self.region.center)
            region['radius'] = self.region.radius
        if self.resolution is not None:
            region['resolution'] = list(self.resolution)
        data = {
            'model': model_to_config(self.model),
            'region': region,
            'criterion': self.criterion.value,
            'solver': {
                'method': self.method,
                'max_iters': self.options.max_iters,
                'l1_tol': self.options.l1_tol,
                'cert_tol': self.options.cert_tol,
                'record_history': self.options.record_history,
                'monotonicity_action': self.options.monotonicity_action,
                'threads': self.options.threads,
                'step_rule': self.step_rule,
                'refine': self.refine,
                'mass_floor': self.mass_floor,
            },
            'output': {'dir': self.output_dir, 'emit': list(self.emit)},
        }
        if self.preset:
            data = {'preset': self.preset, **data}
        return data

    @classmethod
    def from_dict(cls, data, filename=None, lines=None):
        """
        Build a config from plain data; errors name the file and line of the offending section.

        A ``preset`` key supplies defaults for every section the data leaves out.
        """
        lines = lines or {}
        if not isinstance(data, dict):
            raise ConfigurationError(_('A run config must be a mapping.'), filename=filename, line=1)
        unknown = [key for key in data if key not in TOP_LEVEL_KEYS]
        if unknown:
            raise ConfigurationError(
                _('Unknown keys: {}').format(', '.join(map(str, unknown))), filename, lines.get(unknown[0])
            )
        base = None
        if data.get('preset') is not None:
            with _section('preset', filename, lines):
                base = preset(data['preset'], data.get('criterion', Criterion.D))
        elif 'model' not in data or 'region' not in data:
            raise ConfigurationError(_('A run config needs model and region, or a preset.'), filename=filename)

        with _section('model', filename, lines):
            model = model_from_config(data['model']) if 'model' in data else base.model
        with _section('region', filename, lines):
            if 'region' in data:
                region, resolution, rule = _region_from_config(data['region'])
            else:
                region, resolution, rule = base.region, base.resolution, base.rule
        with _section('criterion', filename, lines):
            criterion = Criterion.parse(data.get('criterion', base.criterion if base else Criterion.D))
        with _section('solver', filename, lines):
            solver = _checked_mapping(data.get('solver') or {}, SOLVER_KEYS, 'solver')
            defaults = base.options if base else SolveOptions(criterion=criterion)
            action = solver.get('monotonicity_action')
            if action is None and base is not None and base.criterion is criterion:
                action = defaults.monotonicity_action
            options = SolveOptions(
                criterion=criterion,
                max_iters=int(solver.get('max_iters', defaults.max_iters)),
                l1_tol=float(solver.get('l1_tol', defaults.l1_tol)),
                cert_tol=float(solver.get('cert_tol', defaults.cert_tol)),
                record_history=bool(solver.get('record_history', defaults.record_history)),
                monotonicity_action=action,
                threads=int(solver.get('threads', defaults.threads if base else get_setting('THREADS'))),
            )
        with _section('output', filename, lines):
            output = _checked_mapping(data.get('output') or {}, OUTPUT_KEYS, 'output')
            emit = output.get('emit', base.emit if base else EMIT_CHOICES)
            if isinstance(emit, str):
                emit = [emit]
        with _section('solver', filename, lines):
            return cls(
                model=model,
                region=region,
                options=options,
                resolution=resolution,
                rule=rule,
                method=solver.get('method', base.method if base else MULTIPLICATIVE),
                step_rule=solver.get('step_rule', base.step_rule if base else LINE_SEARCH),
                refine=int(solver.get('refine', base.refine if base else 0)),
                mass_floor=float(solver.get('mass_floor', base.mass_floor if base else get_setting('MASS_FLOOR'))),
                output_dir=str(output.get('dir', base.output_dir if base else get_setting('OUTPUT_DIR'))),
                emit=tuple(emit),
                preset=data.get('preset'),
            )


@contextmanager
def _section(name, filename, lines):
    """
    Re-raise problems inside a config section as ConfigurationError at that section's line.
    """
    try:
        yield
    except ConfigurationError as error:
        if error.filename or not filename:
            raise
        raise ConfigurationError(str(error), filename, lines.get(name)) from error
    except (OptimalDesignError, KeyError, TypeError, ValueError) as error:
        raise ConfigurationError(_('{}: {}').format(name, error), filename, lines.get(name)) from error


def _checked_mapping(value, allowed, name):
    if not isinstance(value, dict):
        raise ConfigurationError(_('{} must be a mapping').format(name))
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ConfigurationError(_('Unknown {} keys: {}').format(name, ', '.join(map(str, unknown))))
    return value


def _region_from_config(value):
    if not isinstance(value, dict) or value.get('kind') not in REGION_KEYS:
        raise ConfigurationError(_('region.kind must be "box" or "disc"'))
    kind = value['kind']
    _checked_mapping(value, REGION_KEYS[kind], 'region')
    resolution = value.get('resolution')
    if isinstance(resolution, int):
        resolution = (resolution,)
    if kind == BOX:
        region = Region.box([tuple(interval) for interval in value['intervals']])
        return region, resolution, value.get('rule', MIDPOINT)
    region = Region.disc(tuple(value.get('center', (0.0, 0.0))), value.get('radius', 1.0))
    return region, resolution, MIDPOINT


def _key_lines(text):
    """
    1-based line of each top-level key, for error messages.
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    if not isinstance(node, yaml.MappingNode):
        return {}
    return {key.value: key.start_mark.line + 1 for key, _value in node.value}


def load_config(path):
    """
    Read a YAML run config.
    """
    try:
        with open(path, encoding='utf-8') as source:
            text = source.read()
    except OSError as error:
        raise ConfigurationError(_('Cannot read config: {}').format(error.strerror), filename=path) from error
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, 'problem_mark', None)
        raise ConfigurationError(
            _('Invalid YAML: {}').format(getattr(error, 'problem', None) or error),
            filename=path,
            line=mark.line + 1 if mark is not None else None,
        ) from error
    config = RunConfig.from_dict(data, filename=path, lines=_key_lines(text))
    log.info('Loaded run config from %s', path)
    return config


def dump_config(config):
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def preset(name, criterion=Criterion.D):
    """
    RunConfig of a named reference problem with its default grid.
    """
    spec = get_preset(name)
    criterion = Criterion.parse(criterion)
    return RunConfig(
        model=model_from_config(spec.model),
        region=spec.region,
        options=SolveOptions(criterion=criterion, max_iters=spec.max_iters, threads=int(get_setting('THREADS'))),
        resolution=tuple(spec.resolution),
        rule=spec.rule,
        mass_floor=float(get_setting('MASS_FLOOR')),
        output_dir=str(get_setting('OUTPUT_DIR')),
        preset=spec.name,
    )


def apply_overrides(config, criterion=None, max_iters=None, cert_tol=None, l1_tol=None, grid=None,
                    threads=None, out=None, emit=None):
    """
    Return ``config`` with command-line values replacing the file's.

    ``grid`` is nodes per dimension for a box and the ring count for a disc
    (with twice as many sectors).
    """
    options = config.options
    if criterion is not None and Criterion.parse(criterion) is not options.criterion:
        # the default action follows the criterion
        options = replace(options, criterion=Criterion.parse(criterion), monotonicity_action=None)
    changes = {
        name: value for name, value in
        (('max_iters', max_iters), ('cert_tol', cert_tol), ('l1_tol', l1_tol), ('threads', threads))
        if value is not None
    }
    if changes:
        options = replace(options, **changes)
    updated = replace(config, options=options)
    if grid is not None:
        resolution = (grid,) if config.region.kind == BOX else (grid, 2 * grid)
        updated = replace(updated, resolution=resolution)
    if out is not None:
        updated = replace(updated, output_dir=out)
    if emit:
        updated = replace(updated, emit=tuple(emit))
    return updated


def build_grid(config):
    return grid_from_region(config.region, config.resolution, rule=config.rule)


@dataclass
class RunResult:
    """
    What one run produced, with the exit status it maps to.
    """

    config: RunConfig
    report: object
    certificate: object
    support: list
    residual_mass: float
    comparison: list = field(default_factory=list)
    passed: bool = True
    written: List[str] = field(default_factory=list)

    @property
    def exit_status(self):
        return EXIT_OK if self.passed else EXIT_DEVIATION

    def to_report(self):
        """
        The report document: every number comes from the solve report or certificate.
        """
        solve_report = self.report
        density = solve_report.final_density
        document = {
            'config': self.config.to_dict(),
            'termination': {
                'reason': solve_report.termination_reason.value,
                'converged': solve_report.converged,
                'solver': solve_report.solver,
                'iterations': solve_report.iterations,
                'criterion_value': float(solve_report.final_criterion_value),
                'gap': float(solve_report.final_gap),
                'monotonicity_violations': solve_report.monotonicity_violations,
                'kl_gain_violations': solve_report.kl_gain_violations,
                'pinsker_violations': solve_report.pinsker_violations,
                'mass_error': float(density.mass_error),
            },
            'certificate': self.certificate.to_dict(),
            'support': [
                {
                    'location': [float(c) for c in point.location],
                    'weight': float(point.weight),
                    'n_cells': point.n_cells,
                    'peak_density': float(point.peak_density),
                }
                for point in self.support
            ],
            'residual_mass': float(self.residual_mass),
        }
        if self.config.preset:
            document['comparison'] = {
                'preset': self.config.preset,
                'criterion': self.config.criterion.value,
                'passed': self.passed,
                'rows': [row.to_dict() for row in self.comparison],
            }
        return yaml.safe_dump(document, sort_keys=False)


def _render(result, grid):
    """
    Render every requested artifact before touching the filesystem.
    """
    config = result.config
    documents = {}
    if REPORT in config.emit:
        documents[REPORT] = result.to_report()
    if HISTORY in config.emit:
        documents[HISTORY] = api.render_csv(api.HistoryCSVProcessor(history=result.report.history))
    if DENSITY in config.emit:
        documents[DENSITY] = api.render_csv(api.DensityCSVProcessor(density=result.report.final_density))
    if SUPPORT in config.emit:
        documents[SUPPORT] = api.render_csv(api.SupportCSVProcessor(support=result.support, dimension=grid.dimension))
    return documents


def _write(documents, output_dir):
    try:
        os.makedirs(output_dir, exist_ok=True)
        written = []
        for name, text in documents.items():
            path = os.path.join(output_dir, FILENAMES[name])
            with open(path, 'w', encoding='utf-8', newline='') as out:
                out.write(text)
            written.append(path)
    except OSError as error:
        raise ConfigurationError(_('Cannot write outputs: {}').format(error.strerror), filename=output_dir) from error
    return written


def execute(config):
    """
    Solve, certify, extract support, compare against the preset and write the outputs.

    Raises MonotonicityViolation after writing when the solver stopped on one.
    """
    grid = build_grid(config)
    log.info('Running %s on a %d-node grid (%s)', config.preset or 'custom problem', grid.size, config.criterion.value)
    if config.method == VDM:
        report = solve_vdm(config.model, grid, config.options, step_rule=config.step_rule)
    else:
        report = solve(config.model, grid, config.options)
    density = report.final_density
    if config.refine > 1:
        certificate = certify_refined(density, grid, config.model, config.criterion, refine=config.refine)
    else:
        certificate = certify(density, grid, config.model, config.criterion)
    support, residual = extract_support(density, grid, mass_floor=config.mass_floor)
    report.support = support
    report.residual_mass = residual

    comparison, passed = [], True
    if config.preset:
        comparison, passed = compare(get_preset(config.preset), config.criterion, support, density, grid)
    result = RunResult(
        config=config,
        report=report,
        certificate=certificate,
        support=support,
        residual_mass=residual,
        comparison=comparison,
        passed=passed,
    )
    result.written = _write(_render(result, grid), config.output_dir)
    if report.termination_reason is TerminationReason.MONOTONICITY_VIOLATION:
        raise MonotonicityViolation(
            _('{} criterion increased at iteration {}; termination reason {}').format(
                config.criterion.value, report.iterations, report.termination_reason.value)
        )
    return result


def run(config):
    """
    Execute ``config`` and return the exit status: 0, or 2 when a preset comparison fails.
    """
    return execute(config).exit_status

