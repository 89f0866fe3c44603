"""
Prefect flows behind the command line: simulate, verify, refinement sweeps and plots.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from prefect import flow, task

from src.config import config as process_config
from src.contact_mcm.diagnose.boundary import boundary_identity_maxima
from src.contact_mcm.diagnose.evolution import evolution_residuals
from src.contact_mcm.diagnose.monitor import catenoid_drift
from src.contact_mcm.diagnose.reconstruct import physical_spacing
from src.contact_mcm.diagnose.report import ResidualReport, observed_orders, sweep_report
from src.contact_mcm.diagnose.support import support_function
from src.contact_mcm.diagnose.velocity import boundary_velocity_residual
from src.contact_mcm.driver import PlanarDriver, RadialDriver, run_loop
from src.contact_mcm.errors import ConfigError, ContactMcmError, NotApplicable
from src.contact_mcm.grid import EXTERIOR
from src.contact_mcm.plot import plot_snapshots
from src.contact_mcm.planar import PlanarConfig
from src.contact_mcm.run_config import RunConfig, refined
from src.contact_mcm.seed import reflect_triple_junction
from src.contact_mcm.storage import (ORDERS_FILE, load_run, save_run, write_text, write_orders,
                                     write_verify)
from src.contact_mcm.trace import RADIAL, RunTrace
from src.contact_mcm.validation import VerifyContext, VerifyResult, evolution_triple, verify_trace

logger = logging.getLogger(__name__)

# Smallest observed order accepted per swept quantity
MIN_ORDERS = {
    "h_split": 1.0,
    "normal_derivative_H": 1.0,
    "normal_derivative_h_tt": 1.0,
    "normal_derivative_h_nn": 1.0,
    "normal_derivative_h_norm2": 1.0,
    "evolution_v": 1.8,
    "evolution_H": 1.8,
    "evolution_h_norm2": 1.8,
    "boundary_velocity": 0.9,
    "support_boundary_value": 1.0,
    "support_normal_derivative": 1.0,
    "catenoid_drift": 1.58,
}
SWEPT_EVOLUTION = ("evolution_v", "evolution_H", "evolution_h_norm2")


###################################################################################################
# Run
###################################################################################################

@task
def simulate(run_config: RunConfig) -> RunTrace:
    """Seed and step one configuration.

    :param run_config:  Validated run configuration
    :return:            Run trace; solver failures are recorded in it, not raised
    """
    solver_config = run_config.solver_config()
    seed = run_config.seed_state(solver_config)
    driver = PlanarDriver(solver_config) if isinstance(solver_config, PlanarConfig) else RadialDriver(solver_config)
    return run_loop(driver, seed)


@task
def persist(directory: Path, trace: RunTrace) -> Path:
    return save_run(directory, trace)


@flow(validate_parameters=False)
def run_flow(run_config: RunConfig, directory: Path) -> RunTrace:
    trace = simulate(run_config)
    persist(directory, trace)
    return trace


###################################################################################################
# Verify
###################################################################################################

@flow(validate_parameters=False)
def verify_flow(directory: Path) -> VerifyResult:
    trace = load_run(directory)
    result = verify_trace(trace)
    write_verify(directory, result.reports)
    return result


###################################################################################################
# Converge
###################################################################################################

@dataclass
class LevelMeasurement:
    level: int
    # quantity -> (spacing, residual)
    values: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    exit_reason: str = ""


def measure(trace: RunTrace) -> Dict[str, Tuple[float, float]]:
    """Residual of every swept quantity that applies to the run."""
    context = VerifyContext.from_trace(trace)
    out: Dict[str, Tuple[float, float]] = {}
    try:
        snapshot = context.mid_snapshot()
    except NotApplicable as e:
        logger.warning(f"nothing to measure: {e}")
        return out
    state = snapshot.state()
    spacing = physical_spacing(state)
    angle = context.angle

    def attempt(label, fn):
        try:
            fn()
        except ContactMcmError as e:
            logger.debug(f"{label} skipped at spacing {spacing:.3e}: {e}")

    def boundary():
        for name, residual in boundary_identity_maxima(state, angle).items():
            out[name] = (spacing, residual)

    def evolution():
        for report in evolution_residuals(evolution_triple(context)):
            if report.identity in SWEPT_EVOLUTION:
                out[report.identity] = (report.spacing, report.residual)

    def velocity():
        out["boundary_velocity"] = (spacing, boundary_velocity_residual(trace, angle, t_probe=snapshot.t))

    def support():
        if not context.concave_lens:
            raise NotApplicable("support needs a concave lens")
        found = support_function(state, angle, context.origin)
        out["support_boundary_value"] = (spacing, found.boundary_value_residual)
        out["support_normal_derivative"] = (spacing, found.boundary_normal_residual)

    def drift():
        if trace.config.get("kind") != EXTERIOR or trace.solver != RADIAL:
            raise NotApplicable("drift needs an exterior radial run")
        final = trace.snapshots[-1].state()
        out["catenoid_drift"] = (physical_spacing(final), catenoid_drift(final))

    attempt("boundary identities", boundary)
    attempt("evolution residuals", evolution)
    attempt("boundary velocity", velocity)
    attempt("support function", support)
    attempt("catenoid drift", drift)
    return out


@task(retries=process_config.converge_task_retries)
def run_level(run_config: RunConfig, level: int, directory: Path) -> LevelMeasurement:
    level_config = refined(run_config, level)
    trace = simulate.fn(level_config)
    save_run(directory / f"level_{level}", trace)
    return LevelMeasurement(level, measure(trace), trace.exit_reason)


@task
def summarize_orders(measurements: List[LevelMeasurement], directory: Path) -> List[ResidualReport]:
    rows = []
    reports = []
    for quantity, min_order in MIN_ORDERS.items():
        present = [m for m in measurements if quantity in m.values]
        if len(present) < 2:
            continue
        spacings = [m.values[quantity][0] for m in present]
        residuals = [m.values[quantity][1] for m in present]
        report = sweep_report(quantity, spacings, residuals, min_order)
        reports.append(report)
        orders = [None] + observed_orders(spacings, residuals)
        for m, h, r, order in zip(present, spacings, residuals, orders):
            rows.append((quantity, m.level, h, r, order, report.passed))
        if not report.passed:
            logger.warning(f"{quantity}: observed order {report.order!r} below {min_order}")
    write_orders(directory / ORDERS_FILE, rows)
    return reports


@flow(validate_parameters=False)
def converge_flow(run_config: RunConfig, levels: int, directory: Path) -> List[ResidualReport]:
    """Run `levels` refinements concurrently and write the observed orders.

    :raises ConfigError: fewer than two levels
    """
    if levels < 2:
        raise ConfigError(f"levels must satisfy levels >= 2, got {levels}")
    futures = [run_level.submit(run_config, level, directory) for level in range(levels)]
    measurements = [f.result() for f in futures]
    for m in measurements:
        logger.info(f"level {m.level}: {m.exit_reason}, {len(m.values)} quantities")
    return summarize_orders(measurements, directory)


###################################################################################################
# Plot
###################################################################################################

@flow(validate_parameters=False)
def plot_flow(directory: Path, triple: bool = False, mesh: bool = False,
              width: Optional[int] = None) -> List[Path]:
    trace = load_run(directory)
    paths = plot_snapshots(directory, trace.snapshots, width or process_config.svg_width, triple)
    if mesh:
        for snapshot in trace.snapshots:
            junction = reflect_triple_junction(snapshot.state())
            paths.append(write_text(directory / f"junction_{snapshot.step:06d}.obj", junction.to_text()))
    logger.info(f"plotted {len(trace.snapshots)} snapshots in {directory}")
    return paths
