"""
Shared stepping loop for both solvers: time-step control, probe times, snapshots, per-step
records and the stop contract (t_end, extinction or error).
"""
from __future__ import annotations
import logging
import traceback
from dataclasses import asdict
from typing import List, Union

from src.contact_mcm import planar, radial
from src.contact_mcm.diagnose.fields import graph_jets
from src.contact_mcm.diagnose.monitor import planar_boundary_residuals, step_record
from src.contact_mcm.errors import IncompatibleSeed, SolverError
from src.contact_mcm.grid import LENS
from src.contact_mcm.planar import PlanarConfig, PlanarState
from src.contact_mcm.radial import RadialConfig, RadialState
from src.contact_mcm.trace import (EXTINCTION, PLANAR, RADIAL, T_END, RunTrace, Snapshot, StepRecord,
                                   error_reason)

logger = logging.getLogger(__name__)

SEED_TOLERANCE = 1e-8


def _config_echo(config) -> dict:
    echo = asdict(config)
    echo["angle"] = {"beta": config.angle.beta, "beta0": config.angle.beta0}
    echo["snapshot_times"] = list(config.snapshot_times)
    echo["origin"] = list(config.origin)
    return echo


class RadialDriver:
    name = RADIAL

    def __init__(self, config: RadialConfig) -> None:
        self.config = config

    @property
    def is_lens(self) -> bool:
        return self.config.kind == LENS

    def validate_seed(self, seed: RadialState) -> None:
        residual = radial.angle_residual(seed, self.config.angle)
        contact = abs(seed.u[seed.grid.contact_index])
        if residual > SEED_TOLERANCE or contact > SEED_TOLERANCE:
            B = radial.squared_angle_residual(seed, self.config.angle)
            raise IncompatibleSeed(
                f"seed violates the boundary conditions: u(1)={contact:.3e}, angle residual "
                f"{residual:.3e}, B={B:.6g}")
        radial.check_mesh(seed, self.config)

    def prepare(self, seed: RadialState) -> None:
        pass

    def stable_dt(self, state: RadialState) -> float:
        return radial.stable_dt(state, self.config)

    def advance(self, state: RadialState, dt: float) -> RadialState:
        return radial.advance(state, self.config, dt)

    def record(self, state: RadialState, step: int, dt: float) -> StepRecord:
        return step_record(state, self.config.angle, step, dt)


class PlanarDriver:
    name = PLANAR
    is_lens = True

    def __init__(self, config: PlanarConfig) -> None:
        self.config = config
        self.jacobian_floor = 0.0

    def validate_seed(self, seed: PlanarState) -> None:
        angle_res, _, orth_res = planar_boundary_residuals(seed, self.config.angle)
        contact = float(abs(seed.u[-1]).max())
        if max(angle_res, orth_res, contact) > SEED_TOLERANCE:
            raise IncompatibleSeed(
                f"seed violates the boundary conditions: max|u|={contact:.3e}, angle {angle_res:.3e}, "
                f"orthogonality {orth_res:.3e}")

    def prepare(self, seed: PlanarState) -> None:
        initial = float(planar.jacobian_determinant(seed).min())
        self.jacobian_floor = self.config.min_jacobian * initial

    def stable_dt(self, state: PlanarState) -> float:
        return planar.stable_dt(state, self.config)

    def advance(self, state: PlanarState, dt: float) -> PlanarState:
        return planar.advance(state, self.config, dt, self.jacobian_floor)

    def record(self, state: PlanarState, step: int, dt: float) -> StepRecord:
        return step_record(state, self.config.angle, step, dt, self.config.origin)


Driver = Union[RadialDriver, PlanarDriver]


def capture(state, step: int, angle) -> Snapshot:
    try:
        H = graph_jets(state, angle).geom.H
    except SolverError:
        H = None
    return Snapshot.capture(state, step, H)


def run_loop(driver: Driver, seed) -> RunTrace:
    """Step `seed` under the driver's configuration.

    :param driver:  Solver adapter
    :param seed:    Initial state
    :return:        Run trace; solver errors end the run with reason error(code)
    """
    config = driver.config
    trace = RunTrace(solver=driver.name, config=_config_echo(config))
    state = seed
    t_end = float(config.t_end)
    probes: List[float] = sorted(t for t in config.snapshot_times if 0.0 < t <= t_end)
    eps = 1e-14 * max(1.0, t_end)
    step = 0
    last_snapshot = -1
    logger.info(f"{driver.name} run started: t_end={t_end}, grid={seed.grid.describe()}")
    try:
        driver.validate_seed(seed)
        driver.prepare(seed)
        trace.initial = driver.record(seed, 0, 0.0)
        trace.snapshots.append(capture(seed, 0, config.angle))
        last_snapshot = 0
        radius0 = seed.radius
        while state.t < t_end - eps:
            if step >= config.max_steps:
                raise SolverError(f"max_steps={config.max_steps} reached at t={state.t}")
            dt = driver.stable_dt(state)
            target = probes[0] if probes else t_end
            landed = state.t + dt >= target - eps
            if landed:
                dt = target - state.t
            state = driver.advance(state, dt)
            if landed:
                state = state.copy_with(t=target)
            step += 1

            done = state.t >= t_end - eps
            extinct = driver.is_lens and state.radius < config.extinction_radius * radius0
            if step % config.record_every == 0 or landed or done or extinct:
                trace.records.append(driver.record(state, step, dt))
            probe_hit = landed and probes and target == probes[0]
            if probe_hit:
                probes.pop(0)
            periodic = config.snapshot_every > 0 and step % config.snapshot_every == 0
            if periodic or probe_hit:
                trace.snapshots.append(capture(state, step, config.angle))
                last_snapshot = step
                logger.debug(f"snapshot at step {step}, t={state.t}")
            if extinct:
                trace.exit_reason = EXTINCTION
                break
        else:
            trace.exit_reason = T_END
    except SolverError as e:
        trace.exit_reason = error_reason(e.code)
        trace.error_message = str(e)
        logger.error(f"{driver.name} run stopped at step {step}, t={state.t}: {e}\n{traceback.format_exc()}")
    if step > 0 and last_snapshot != step:
        trace.snapshots.append(capture(state, step, config.angle))
    trace.final_state = state
    logger.info(f"{driver.name} run finished after {step} steps: {trace.exit_reason}")
    return trace
