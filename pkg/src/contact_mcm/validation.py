"""
Verification of stored runs.

Checks are registered on a CheckBook in the order they run. Each check receives the
VerifyContext of one run and returns its reports; a check that does not apply to the run raises
NotApplicable and is recorded with passed = None.
"""
from __future__ import annotations
import logging
import math
import traceback
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

from src.contact_mcm.diagnose.boundary import check_boundary_identities as boundary_identity_reports
from src.contact_mcm.diagnose.bounds import (CONCAVE_TOLERANCE, angle_from_trace, bounds_monitor,
                                             extinction_bound, is_lens)
from src.contact_mcm.diagnose.continuation import continuation_monitor
from src.contact_mcm.diagnose.evolution import evolution_residuals, subsolution_check
from src.contact_mcm.diagnose.monitor import catenoid_drift
from src.contact_mcm.diagnose.pointwise import conformal_frame_check, normal_identities, trace_identity
from src.contact_mcm.diagnose.reconstruct import physical_spacing
from src.contact_mcm.diagnose.report import BoundReport, ResidualReport
from src.contact_mcm.diagnose.support import support_function
from src.contact_mcm.diagnose.velocity import boundary_velocity_residual, flux_identity
from src.contact_mcm.driver import Driver, PlanarDriver, RadialDriver
from src.contact_mcm.errors import ContactMcmError, NotApplicable
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import EXTERIOR
from src.contact_mcm.run_config import solver_config_from_echo
from src.contact_mcm.trace import PLANAR, RADIAL, RunTrace, Snapshot

logger = logging.getLogger(__name__)

Report = Union[ResidualReport, BoundReport]
Check = Callable[["VerifyContext"], List[Report]]

BOUNDARY_CONDITION_TOLERANCE = 1e-10
CATENOID_DRIFT_LIMIT = 1e-3
CATENOID_SEED_TOLERANCE = 1e-8


@dataclass
class VerifyContext:
    trace: RunTrace
    angle: ContactAngle
    origin: Optional[Tuple[float, float]] = None

    @classmethod
    def from_trace(cls, trace: RunTrace) -> VerifyContext:
        origin = trace.config.get("origin")
        return cls(trace, angle_from_trace(trace), None if origin is None else tuple(origin))

    @property
    def moving_snapshots(self) -> List[Snapshot]:
        return [s for s in self.trace.snapshots if s.step > 0]

    def mid_snapshot(self) -> Snapshot:
        """Middle snapshot among those taken after the first step."""
        moving = self.moving_snapshots
        if not moving:
            raise NotApplicable("run holds no snapshot after the first step")
        return moving[(len(moving) - 1) // 2]

    @property
    def concave_lens(self) -> bool:
        initial = self.trace.initial
        return is_lens(self.trace) and initial is not None and initial.h_eig_max <= CONCAVE_TOLERANCE

    def driver(self) -> Driver:
        config = solver_config_from_echo(self.trace.solver, self.trace.config)
        if self.trace.solver == PLANAR:
            driver = PlanarDriver(config)
            driver.prepare(self.trace.snapshots[0].state())
            return driver
        return RadialDriver(config)


class CheckBook:

    def __init__(self) -> None:
        self.checks: List[Check] = []

    def __call__(self, func: Check) -> Check:
        """Wrapper appending a check to the CheckBook.

        :param func: Check function; runs after every check registered before it
        """
        self.checks.append(func)
        return func

    def run(self, context: VerifyContext) -> List[Report]:
        reports: List[Report] = []
        for check in self.checks:
            name = check.__name__.replace("check_", "", 1)
            try:
                reports.extend(check(context))
            except NotApplicable as e:
                logger.debug(f"check {name} not applicable: {e}")
                reports.append(BoundReport.not_applicable(name, str(e)))
            except (ContactMcmError, ArithmeticError, ValueError) as e:
                logger.debug(f"check {name} raised: {e}\n{traceback.format_exc()}")
                reports.append(ResidualReport(name, math.inf, passed=False,
                                              detail={"error": f"{type(e).__name__}: {e}"}))
        return reports


default_checkbook = CheckBook()


###################################################################################################
# Pointwise
###################################################################################################

@default_checkbook
def check_trace_identity(context: VerifyContext) -> List[Report]:
    """g^ij h_ij of every stored snapshot against its stored H; corrupt fields fail here first."""
    reports = []
    for snapshot in context.trace.snapshots:
        try:
            reports.append(trace_identity(snapshot, context.angle))
        except NotApplicable as e:
            reports.append(BoundReport.not_applicable("trace_identity", str(e)))
    return reports


@default_checkbook
def check_normal_identities(context: VerifyContext) -> List[Report]:
    return normal_identities(context.mid_snapshot().state(), context.angle)


@default_checkbook
def check_boundary_conditions(context: VerifyContext) -> List[Report]:
    records = context.trace.all_records()
    worst_angle = max(r.angle_res for r in records)
    worst_orth = max(r.orth_res for r in records)
    reports = [ResidualReport("angle_condition", worst_angle, spacing=None,
                              passed=worst_angle <= BOUNDARY_CONDITION_TOLERANCE)]
    if context.trace.solver == PLANAR:
        reports.append(ResidualReport("orthogonality_condition", worst_orth, spacing=None,
                                      passed=worst_orth <= BOUNDARY_CONDITION_TOLERANCE))
    return reports


###################################################################################################
# Boundary
###################################################################################################

@default_checkbook
def check_boundary_identities(context: VerifyContext) -> List[Report]:
    return boundary_identity_reports(context.mid_snapshot().state(), context.angle)


@default_checkbook
def check_support(context: VerifyContext) -> List[Report]:
    if not context.concave_lens:
        raise NotApplicable("support function needs a concave lens run")
    state = context.mid_snapshot().state()
    field_ = support_function(state, context.angle, context.origin)
    return field_.reports(physical_spacing(state))


@default_checkbook
def check_conformal_frame(context: VerifyContext) -> List[Report]:
    state = context.mid_snapshot().state()
    return [conformal_frame_check(state, context.angle, concave=context.concave_lens)]


###################################################################################################
# Evolution
###################################################################################################

def evolution_triple(context: VerifyContext) -> list:
    """Mid snapshot advanced twice by one stable step of the recorded solver configuration."""
    driver = context.driver()
    start = context.mid_snapshot().state()
    dt = driver.stable_dt(start)
    first = driver.advance(start, dt)
    return [start, first, driver.advance(first, dt)]


@default_checkbook
def check_evolution(context: VerifyContext) -> List[Report]:
    triple = evolution_triple(context)
    a0 = max(r.h_norm_max for r in context.trace.all_records())
    reports: List[Report] = list(evolution_residuals(triple))
    reports.append(subsolution_check(triple, a0=a0))
    return reports


###################################################################################################
# Run-level bounds
###################################################################################################

@default_checkbook
def check_bounds(context: VerifyContext) -> List[Report]:
    return list(bounds_monitor(context.trace, context.angle).bounds)


@default_checkbook
def check_extinction(context: VerifyContext) -> List[Report]:
    return extinction_bound(context.trace, context.angle).reports()


@default_checkbook
def check_continuation(context: VerifyContext) -> List[Report]:
    return [continuation_monitor(context.trace).to_bound()]


@default_checkbook
def check_boundary_velocity(context: VerifyContext) -> List[Report]:
    snapshot = context.mid_snapshot()
    state = snapshot.state()
    records = context.trace.all_records()
    nearest = min(records, key=lambda r: abs(r.t - snapshot.t))
    residual = boundary_velocity_residual(context.trace, context.angle, t_probe=snapshot.t)
    return [ResidualReport("boundary_velocity", residual, spacing=physical_spacing(state),
                           scale=abs(nearest.H_boundary) / context.angle.beta0, detail={"t": snapshot.t})]


@default_checkbook
def check_flux(context: VerifyContext) -> List[Report]:
    return [flux_identity(context.mid_snapshot().state(), context.angle)]


@default_checkbook
def check_catenoid_drift(context: VerifyContext) -> List[Report]:
    trace = context.trace
    if trace.solver != RADIAL or trace.config.get("kind") != EXTERIOR or len(trace.snapshots) < 2:
        raise NotApplicable("catenoid drift needs an exterior radial run with snapshots")
    first = trace.snapshots[0].state()
    try:
        seeded = catenoid_drift(first, skip_contact=True) <= CATENOID_SEED_TOLERANCE
    except ContactMcmError:
        seeded = False
    if not seeded or abs(context.angle.slope - math.sqrt(3.0)) > 1e-12:
        raise NotApplicable("run was not seeded with the stationary catenoid")
    drift = catenoid_drift(trace.snapshots[-1].state())
    return [BoundReport("catenoid_drift", drift, CATENOID_DRIFT_LIMIT, drift <= CATENOID_DRIFT_LIMIT,
                        {"t": trace.snapshots[-1].t})]


###################################################################################################
# Entry point
###################################################################################################

@dataclass
class VerifyResult:
    reports: List[Report] = field(default_factory=list)
    # failure name -> count, in first-failure order
    failures: Dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def first_failure(self) -> Optional[str]:
        return next(iter(self.failures), None)


def verify_trace(trace: RunTrace, checkbook: CheckBook = default_checkbook,
                 checks_logger: Optional[logging.Logger] = None) -> VerifyResult:
    """Run every check of `checkbook` on a stored run.

    :param trace:           Run loaded from disk
    :param checkbook:       Checks to run, in registration order
    :param checks_logger:   Logger receiving the failure tracker, defaults to this module's
    :return:                All reports and the failure tracker
    """
    checks_logger = checks_logger or logger
    context = VerifyContext.from_trace(trace)
    result = VerifyResult(checkbook.run(context))
    for report in result.reports:
        if report.passed is False:
            checks_logger.debug(f"check '{report.name}' failed: {report.to_dict()}")
            result.failures[report.name] = result.failures.get(report.name, 0) + 1
    total = sum(result.failures.values())
    if total > 0:
        pairs = " ".join(f'"{k}"={v}' for k, v in result.failures.items())
        checks_logger.error(f"Verify Tracker: {pairs} total={total}")
    return result

