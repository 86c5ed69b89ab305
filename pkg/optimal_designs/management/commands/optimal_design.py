"""
Solve, re-certify, and list reference optimal design problems.

Examples:
    ./manage.py optimal_design solve --preset setting3 --criterion D
    ./manage.py optimal_design solve --config run.yaml --out results --emit report --emit support
    ./manage.py optimal_design certify --preset setting3 --density results/density.csv
    ./manage.py optimal_design preset list
"""

import logging

import yaml
from django.core.management.base import BaseCommand, CommandError
from django.utils.translation import gettext as _

from optimal_designs.api import load_density_csv
from optimal_designs.certification import certify, certify_refined
from optimal_designs.exceptions import ConfigurationError, OptimalDesignError
from optimal_designs.presets import PRESETS, list_presets
from optimal_designs.runs import (
    EMIT_CHOICES,
    EXIT_DEVIATION,
    EXIT_ERROR,
    apply_overrides,
    build_grid,
    execute,
    load_config,
    preset
)

log = logging.getLogger(__name__)


class Command(BaseCommand):
    """
    Run the optimal design solver from the command line.
    """

    help = 'Compute D- or A-optimal continuous designs and check them against reference problems.'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='action', required=True)

        solve = subparsers.add_parser('solve', help='Solve a preset or configured problem.')
        self._add_problem_arguments(solve)
        solve.add_argument('--out', help='Output directory (default: OPTDES_OUT or the OUTPUT_DIR setting).')
        solve.add_argument('--max-iters', type=int, dest='max_iters')
        solve.add_argument('--cert-tol', type=float, dest='cert_tol')
        solve.add_argument('--l1-tol', type=float, dest='l1_tol')
        solve.add_argument('--threads', type=int)
        solve.add_argument(
            '--emit', action='append', choices=EMIT_CHOICES,
            help='Output to write; repeat for several. Default: all.',
        )

        recertify = subparsers.add_parser('certify', help='Certify a density CSV written by solve.')
        self._add_problem_arguments(recertify)
        recertify.add_argument('--density', required=True, help='Density CSV to certify.')
        recertify.add_argument(
            '--refine', type=int, default=0,
            help='Also evaluate the sensitivity on a grid this many times finer.',
        )

        presets = subparsers.add_parser('preset', help='Inspect the reference problems.')
        presets.add_argument('preset_action', choices=['list'])

    @staticmethod
    def _add_problem_arguments(parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--preset', choices=list(PRESETS))
        source.add_argument('--config', help='YAML run config.')
        parser.add_argument('--criterion', choices=['D', 'A'], type=str.upper)
        parser.add_argument('--grid', type=int, help='Nodes per dimension (box) or rings (disc).')

    def handle(self, *args, **options):
        try:
            if options['action'] == 'solve':
                self._solve(options)
            elif options['action'] == 'certify':
                self._certify(options)
            else:
                self._list_presets()
        except OptimalDesignError as error:
            log.error('optimal_design %s failed: %s', options['action'], error)
            raise CommandError(str(error), returncode=EXIT_ERROR) from error

    def _config(self, options):
        if options.get('config'):
            config = load_config(options['config'])
        else:
            config = preset(options['preset'], options.get('criterion') or 'D')
        return apply_overrides(
            config,
            criterion=options.get('criterion'),
            max_iters=options.get('max_iters'),
            cert_tol=options.get('cert_tol'),
            l1_tol=options.get('l1_tol'),
            grid=options.get('grid'),
            threads=options.get('threads'),
            out=options.get('out'),
            emit=options.get('emit'),
        )

    def _solve(self, options):
        config = self._config(options)
        result = execute(config)
        report = result.report
        self.stdout.write(
            f'{config.criterion.value} solve stopped after {report.iterations} iterations: '
            f'{report.termination_reason.value}, gap {result.certificate.gap:.3e}'
        )
        for point in result.support:
            location = ', '.join(f'{c:+.4f}' for c in point.location)
            self.stdout.write(f'  ({location})  weight {point.weight:.4f}  cells {point.n_cells}')
        self.stdout.write(f'  residual mass {result.residual_mass:.3e}')
        for row in result.comparison:
            status = 'info' if row.informational else ('ok' if row.passed else 'FAIL')
            self.stdout.write(
                f'  {row.label}: {row.computed:.4f} vs {row.expected:.4f} '
                f'(deviation {row.deviation:.4f}, tolerance {row.tolerance}) {status}'
            )
        for path in result.written:
            self.stdout.write(f'Wrote {path}')
        if not result.passed:
            raise CommandError(
                f'{config.preset} {config.criterion.value} deviates from the expected weights',
                returncode=EXIT_DEVIATION,
            )

    def _certify(self, options):
        config = self._config(options)
        grid = build_grid(config)
        density = load_density_csv(options['density'], grid)
        if density.mass_error > 1e-6:
            log.warning('Density in %s has total mass %.10g', options['density'], density.total_mass)
        if options['refine'] < 0:
            raise ConfigurationError(_('--refine must not be negative, got {}').format(options['refine']))
        if options['refine'] > 1:
            certificate = certify_refined(density, grid, config.model, config.criterion, refine=options['refine'])
        else:
            certificate = certify(density, grid, config.model, config.criterion)
        self.stdout.write(yaml.safe_dump({'certificate': certificate.to_dict()}, sort_keys=False))

    def _list_presets(self):
        for summary in list_presets():
            tables = ', '.join(summary['tables']) or '-'
            self.stdout.write(
                f'{summary["name"]}: {summary["description"]}\n'
                f'    model {summary["model"]["basis"]} (d={summary["model"]["dimension"]}), '
                f'region {summary["region"]}, grid {"x".join(map(str, summary["resolution"]))} {summary["rule"]}, '
                f'expected values for: {tables}'
            )
