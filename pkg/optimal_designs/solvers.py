"""
Multiplicative fixed-point algorithms for D- and A-optimal design densities,
a vertex-direction baseline, and the driver that runs them to convergence.
"""

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from django.utils.translation import gettext as _
from scipy.special import kl_div

from .design import (
    Criterion,
    DesignDensity,
    criterion_value_of,
    info_matrix,
    sensitivity,
    sensitivity_bound,
    uniform_density,
)
from .exceptions import KLUndefined

log = logging.getLogger(__name__)

FAIL = 'fail'
WARN = 'warn'

HARMONIC = 'harmonic'
LINE_SEARCH = 'line-search'
STEP_RULES = (HARMONIC, LINE_SEARCH)

# cells below this density are treated as dead
DEAD_CELL = 1e-300
# every iteration is kept up to this count, then every tenth
FULL_HISTORY = 10_000
PINSKER_SLACK = 1e-10
KL_GAIN_SLACK = 1e-8
MONOTONICITY_SLACK = 1e-12


class TerminationReason(str, enum.Enum):
    CERT_TOL = 'CertTol'
    L1_TOL = 'L1Tol'
    MAX_ITERS = 'MaxIters'
    MONOTONICITY_VIOLATION = 'MonotonicityViolation'


CONVERGED_REASONS = (TerminationReason.CERT_TOL, TerminationReason.L1_TOL)


@dataclass
class SolveOptions:
    """
    Stopping rules and bookkeeping for a solve.
    """

    criterion: Criterion = Criterion.D
    max_iters: int = 5000
    l1_tol: float = 1e-9
    cert_tol: float = 1e-4
    record_history: bool = True
    monotonicity_action: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        self.criterion = Criterion.parse(self.criterion)
        if self.max_iters < 1:
            raise ValueError(_('max_iters must be at least 1, got {}').format(self.max_iters))
        if not (self.l1_tol > 0 and self.cert_tol > 0):
            raise ValueError(_('Tolerances must be positive.'))
        if self.monotonicity_action is None:
            self.monotonicity_action = FAIL if self.criterion is Criterion.D else WARN
        if self.monotonicity_action not in (FAIL, WARN):
            raise ValueError(_('monotonicity_action must be "fail" or "warn", got {!r}').format(
                self.monotonicity_action))
        if self.threads < 1:
            raise ValueError(_('threads must be at least 1, got {}').format(self.threads))


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    criterion_value: float
    l1_step: float
    kl_step: float
    cert_gap: float
    wall_time: float
    min_density: float
    mass_error: float


@dataclass
class SolveReport:
    """
    Outcome of a solve: the last density, its history, and why the loop stopped.
    """

    criterion: Criterion
    final_density: DesignDensity
    history: List[IterationRecord]
    termination_reason: TerminationReason
    iterations: int
    final_criterion_value: float
    final_gap: float
    monotonicity_violations: int = 0
    kl_gain_violations: int = 0
    pinsker_violations: int = 0
    solver: str = 'multiplicative'
    support: list = field(default_factory=list)
    residual_mass: Optional[float] = None

    @property
    def converged(self):
        return self.termination_reason in CONVERGED_REASONS


def pinsker_check(f_new, f_old, grid):
    """
    Return (l1, kl, holds) with l1 = int |f_new - f_old| and kl = int f_new log(f_new / f_old).

    ``holds`` is whether l1 <= sqrt(2 kl) + 1e-10. The 0 log(0 / .) terms contribute 0.
    """
    new = np.asarray(getattr(f_new, 'values', f_new))
    old = np.asarray(getattr(f_old, 'values', f_old))
    if np.any((new > 0) & (old <= 0)):
        raise KLUndefined(_('The new density is positive on a cell where the old density is zero.'))
    l1 = float(np.sum(np.abs(new - old) * grid.measures))
    # kl_div(x, y) = x log(x / y) - x + y >= 0 per cell; the extra terms sum to zero for normalized pairs
    kl = float(np.sum(kl_div(new, old) * grid.measures))
    return l1, kl, l1 <= math.sqrt(2.0 * kl) + PINSKER_SLACK


def _clamp_dead_cells(values):
    values[values < DEAD_CELL] = 0.0
    return values


def _multiplicative(criterion, f, sens, p):
    """
    One multiplicative update given the sensitivity of ``f``; no renormalization.
    """
    if criterion is Criterion.D:
        factor = sens / p
    else:
        factor = ((p - 1) * sens + 1.0) / p
    return DesignDensity(f.grid, _clamp_dead_cells(f.values * factor))


def d_step(f, grid, model, threads=1):
    """
    f'(w) = f(w) x(w)^T M(f)^{-1} x(w) / p.
    """
    sens = sensitivity(Criterion.D, f, grid, model, threads=threads)
    return _multiplicative(Criterion.D, f, sens, model.p)


def a_step(f, grid, model, threads=1):
    """
    f'(w) = (f(w) / p) [(p - 1) psi(w) + 1] with psi the normalized A-sensitivity.
    """
    sens = sensitivity(Criterion.A, f, grid, model, threads=threads)
    return _multiplicative(Criterion.A, f, sens, model.p)


def vdm_step_length(phi_max, p, step_rule=LINE_SEARCH, iteration=1):
    """
    Fraction of mass moved to the vertex of largest variance.

    The line search maximizes log det((1 - l) M + l x x^T)
    = (p - 1) log(1 - l) + log(1 - l + l phi) + log det M in closed form.
    """
    if step_rule == HARMONIC:
        return 1.0 / (iteration + 1)
    if step_rule != LINE_SEARCH:
        raise ValueError(_('Unknown step rule {!r}').format(step_rule))
    if phi_max <= p:
        return 0.0
    return min(1.0, (phi_max - p) / (p * (phi_max - 1.0)))


def _vertex_move(f, phi, p, step_rule, iteration):
    vertex = int(np.argmax(phi))
    step = vdm_step_length(float(phi[vertex]), p, step_rule, iteration)
    values = (1.0 - step) * f.values
    values[vertex] += step / f.grid.measures[vertex]
    return DesignDensity(f.grid, values), vertex, step


def vdm_d_step(f, grid, model, step_rule=LINE_SEARCH, iteration=1, threads=1):
    """
    Fedorov-Wynn step: f' = (1 - l) f + l delta_{w*}, w* the argmax of phi.

    The point mass is the density 1 / mu at the cell of w*.
    """
    phi = sensitivity(Criterion.D, f, grid, model, threads=threads)
    new, _vertex, _step = _vertex_move(f, phi, model.p, step_rule, iteration)
    return new


class _Driver:
    """
    Shared iteration loop: bookkeeping, stopping rules and history.
    """

    def __init__(self, model, grid, opts, solver):
        self.model = model
        self.grid = grid
        self.opts = opts
        self.solver = solver
        self.criterion = opts.criterion
        self.bound = sensitivity_bound(opts.criterion, model.p)
        self.history = []
        self.monotonicity_violations = 0
        self.kl_gain_violations = 0
        self.pinsker_violations = 0
        self.started = time.perf_counter()

    def evaluate(self, f):
        info = info_matrix(f, self.grid, self.model)
        sens = sensitivity(self.criterion, f, self.grid, self.model, info=info, threads=self.opts.threads)
        return info, sens

    def record(self, iteration, f, value, gap, l1=0.0, kl=0.0, force=False):
        if not self.opts.record_history:
            return
        if not force and iteration > FULL_HISTORY and iteration % 10:
            return
        if self.history and self.history[-1].iter == iteration:
            return
        self.history.append(IterationRecord(
            iter=iteration,
            criterion_value=value,
            l1_step=l1,
            kl_step=kl,
            cert_gap=gap,
            wall_time=time.perf_counter() - self.started,
            min_density=float(np.min(f.values)),
            mass_error=f.mass_error,
        ))

    def check_monotone(self, iteration, value, new_value, l1, kl, pinsker_holds):
        """
        Count criterion increases beyond MONOTONICITY_SLACK; True when the run must stop.
        """
        if not pinsker_holds:
            self.pinsker_violations += 1
            log.warning('Pinsker bound failed at iteration %d: l1=%.3e kl=%.3e', iteration, l1, kl)
        if self.criterion is Criterion.D and self.solver == 'multiplicative':
            # log det gain is at least p * KL(f_new || f_old)
            if (value - new_value) < self.model.p * kl - KL_GAIN_SLACK:
                self.kl_gain_violations += 1
                log.warning('log det gain %.3e below p*kl=%.3e at iteration %d',
                            value - new_value, self.model.p * kl, iteration)
        if new_value - value <= MONOTONICITY_SLACK:
            return False
        self.monotonicity_violations += 1
        if self.opts.monotonicity_action == FAIL:
            log.error('%s criterion increased from %.17g to %.17g at iteration %d',
                      self.criterion.value, value, new_value, iteration)
            return True
        log.warning('%s criterion increased from %.17g to %.17g at iteration %d',
                    self.criterion.value, value, new_value, iteration)
        return False

    def run(self, step):
        """
        Iterate ``step(f, sens, iteration) -> f_new`` from the uniform density.
        """
        f = uniform_density(self.grid)
        info, sens = self.evaluate(f)
        value = criterion_value_of(self.criterion, info)
        gap = float(np.max(sens)) - self.bound
        iteration = 0
        l1 = kl = 0.0
        self.record(iteration, f, value, gap)
        reason = None
        while reason is None:
            if gap <= self.opts.cert_tol:
                reason = TerminationReason.CERT_TOL
                break
            if iteration >= self.opts.max_iters:
                reason = TerminationReason.MAX_ITERS
                break
            iteration += 1
            f_new = step(f, sens, iteration)
            info_new, sens_new = self.evaluate(f_new)
            new_value = criterion_value_of(self.criterion, info_new)
            l1, kl, holds = pinsker_check(f_new, f, self.grid)
            new_gap = float(np.max(sens_new)) - self.bound
            log.debug('iter %d: value=%.17g gap=%.3e l1=%.3e kl=%.3e', iteration, new_value, new_gap, l1, kl)
            if self.check_monotone(iteration, value, new_value, l1, kl, holds):
                reason = TerminationReason.MONOTONICITY_VIOLATION
            f, sens, value, gap = f_new, sens_new, new_value, new_gap
            self.record(iteration, f, value, gap, l1, kl)
            if reason is None and l1 <= self.opts.l1_tol:
                reason = TerminationReason.L1_TOL

        self.record(iteration, f, value, gap, l1, kl, force=True)
        report = SolveReport(
            criterion=self.criterion,
            final_density=f,
            history=self.history,
            termination_reason=reason,
            iterations=iteration,
            final_criterion_value=value,
            final_gap=gap,
            monotonicity_violations=self.monotonicity_violations,
            kl_gain_violations=self.kl_gain_violations,
            pinsker_violations=self.pinsker_violations,
            solver=self.solver,
        )
        level = logging.INFO if report.converged else logging.WARNING
        log.log(level, '%s solve (%s) stopped after %d iterations: %s, criterion=%.10g, gap=%.3e',
                self.criterion.value, self.solver, iteration, reason.value, value, gap)
        return report


def solve(model, grid, opts=None):
    """
    Run the multiplicative algorithm for ``opts.criterion`` from the uniform density.

    Stops when the certificate gap is at most ``cert_tol``, the L1 step is at
    most ``l1_tol``, ``max_iters`` is reached, or (with action ``fail``) the
    criterion increases.
    """
    opts = opts or SolveOptions()
    driver = _Driver(model, grid, opts, solver='multiplicative')

    def step(f, sens, _iteration):
        return _multiplicative(opts.criterion, f, sens, model.p)

    return driver.run(step)


def solve_vdm(model, grid, opts=None, step_rule=LINE_SEARCH):
    """
    Run the vertex-direction baseline for D-optimality.
    """
    opts = opts or SolveOptions(criterion=Criterion.D, monotonicity_action=WARN)
    if opts.criterion is not Criterion.D:
        raise ValueError(_('The vertex-direction baseline only supports the D criterion.'))
    driver = _Driver(model, grid, opts, solver=f'vdm-{step_rule}')

    def step(f, sens, iteration):
        new, _vertex, _step = _vertex_move(f, sens, model.p, step_rule, iteration)
        return new

    return driver.run(step)
