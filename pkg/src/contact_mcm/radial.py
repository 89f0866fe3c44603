"""
Rotationally symmetric split-gauge solver.

The surface is F(r) = [phi(r) e_r, u(r)] over a fixed reference interval: [0, 1] for lenses,
[1, R_ref] for exteriors. With s^2 = phi_r^2 + u_r^2 the parametrized flow F_t = g^ij F_ij
reads

    u_t   = u_rr / s^2 + r u_r / phi^2
    phi_t = phi_rr / s^2 + r phi_r / phi^2 - 1 / phi

and its normal component equals the mean curvature

    H = [phi_r u_rr - u_r phi_rr + s^2 u_r / phi] / s^3.

The contact node r = 1 carries u = 0 and the resolved angle condition
beta u_r + beta0 phi_r = 0 (lens) or beta u_r - beta0 phi_r = 0 (exterior).
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import TYPE_CHECKING, Tuple, Union

import numpy as np

from src.contact_mcm.errors import (BcSolveFailure, DegenerateState, DomainError, MeshDegeneracy,
                                    StepUnderflow)
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import (EXTERIOR, LENS, RadialGrid, ScalarField, backward_slope,
                                  slope_neighbours)

if TYPE_CHECKING:
    from src.contact_mcm.trace import RunTrace

logger = logging.getLogger(__name__)

PINNED = "pinned"
VERTICAL_WALL = "vertical_wall"
NONE = "none"

DERIVED = "derived"
PRINTED = "printed"

MIN_DT = 1e-14
CATENOID_NECK = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class OuterBoundary:
    kind: str = NONE
    u_out: float = 0.0
    phi_out: float = 0.0


@dataclass(frozen=True)
class RadialConfig:
    kind: str
    angle: ContactAngle
    n_nodes: int
    outer_bc: OuterBoundary = field(default_factory=OuterBoundary)
    cfl_sigma: float = 0.4
    t_end: float = 1.0
    snapshot_every: int = 0
    extinction_radius: float = 1e-3
    r_outer: float = 3.0
    min_stretch: float = 0.05
    max_steps: int = 50_000_000
    record_every: int = 1
    snapshot_times: Tuple[float, ...] = ()
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in (LENS, EXTERIOR):
            raise DomainError(f"kind must be one of lens, exterior; got '{self.kind}'")
        if self.n_nodes < 16:
            raise DomainError(f"n_nodes must satisfy n_nodes >= 16, got {self.n_nodes}")
        if not 0.0 < self.cfl_sigma <= 0.5:
            raise DomainError(f"cfl_sigma must satisfy 0 < cfl_sigma <= 0.5, got {self.cfl_sigma}")
        if self.kind == LENS and self.outer_bc.kind != NONE:
            raise DomainError("a lens has no outer boundary; outer_bc must be none")
        if self.kind == EXTERIOR and self.outer_bc.kind not in (PINNED, VERTICAL_WALL):
            raise DomainError("an exterior run needs outer_bc pinned or vertical_wall")
        if self.t_end < 0:
            raise DomainError(f"t_end must be non-negative, got {self.t_end}")

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid(self.kind, self.n_nodes, 1.0 if self.kind == LENS else self.r_outer)


@dataclass(frozen=True)
class RadialState:
    t: float
    u: np.ndarray
    phi: np.ndarray
    grid: RadialGrid

    @property
    def radius(self) -> float:
        """Radius of the free boundary, phi at the contact node."""
        return float(self.phi[self.grid.contact_index])

    def copy_with(self, **changes) -> RadialState:
        return replace(self, **changes)

    @cached_property
    def derivatives(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        # shared by stable_dt and the first Heun stage of the same state
        grid = self.grid
        return (grid.d_dr(self.u, 1), grid.d2_dr2(self.u, 1),
                grid.d_dr(self.phi, -1), grid.d2_dr2(self.phi, -1))


###################################################################################################
# Exact catenoid
###################################################################################################

def catenoid_profile(r: Union[float, np.ndarray], derivative: bool = False):
    """Catenoid meeting the plane at r = 1 with slope sqrt(3), stationary for beta = 1/2.

    :param r:           Radius, at least sqrt(3)/2
    :param derivative:  Return u'(r) instead of u(r)
    :raises DomainError: r below the neck radius
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < CATENOID_NECK):
        raise DomainError(f"catenoid profile is defined for r >= sqrt(3)/2, got {r_arr.min()}")
    root = np.sqrt(4 * r_arr * r_arr - 3)
    if derivative:
        out = math.sqrt(3.0) / root
    else:
        out = 0.5 * math.sqrt(3.0) * (np.log(2 * r_arr + root) - math.log(3.0))
    return float(out) if np.ndim(out) == 0 else out


def catenoid_state(grid: RadialGrid, t: float = 0.0) -> RadialState:
    r = grid.nodes
    return RadialState(t, catenoid_profile(r), r.copy(), grid)


###################################################################################################
# Differential operators
###################################################################################################

def derivatives(state: RadialState) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(u_r, u_rr, phi_r, phi_rr); u is even and phi odd about the lens pole."""
    return state.derivatives


def _stretch2(u_r: np.ndarray, phi_r: np.ndarray) -> np.ndarray:
    s2 = phi_r * phi_r + u_r * u_r
    if np.any(s2 < 1e-14):
        raise DegenerateState(f"phi_r^2 + u_r^2 degenerate, min {s2.min():.3e}")
    return s2


def radial_mean_curvature(state: RadialState) -> ScalarField:
    u_r, u_rr, phi_r, phi_rr = derivatives(state)
    s2 = _stretch2(u_r, phi_r)
    H = (phi_r * u_rr - u_r * phi_rr + s2 * u_r / state.phi) / s2 ** 1.5
    return ScalarField(state.grid, H)


def rhs_split_gauge(state: RadialState, form: str = DERIVED) -> Tuple[np.ndarray, np.ndarray]:
    """Right-hand side of the split-gauge system.

    :param state:   Current state
    :param form:    'derived' integrates the system above; 'printed' swaps the first order term
                    of the u equation for u_r phi_r / phi^2 and exists for the residual test only
    :return:        (du/dt, dphi/dt)
    """
    u_r, u_rr, phi_r, phi_rr = derivatives(state)
    s2 = _stretch2(u_r, phi_r)
    r = state.grid.nodes
    phi = state.phi
    if np.any(phi <= 0):
        raise DegenerateState("phi must stay positive")
    if form == DERIVED:
        du = u_rr / s2 + r * u_r / phi ** 2
    elif form == PRINTED:
        du = u_rr / s2 + u_r * phi_r / phi ** 2
    else:
        raise ValueError(f"unknown split-gauge form '{form}'")
    dphi = phi_rr / s2 + r * phi_r / phi ** 2 - 1.0 / phi
    return du, dphi


def normal_speed_defect(state: RadialState, form: str = DERIVED) -> np.ndarray:
    """<F_t, N> - H per node; vanishes identically for the derived form."""
    du, dphi = rhs_split_gauge(state, form)
    u_r, _, phi_r, _ = derivatives(state)
    s = np.sqrt(_stretch2(u_r, phi_r))
    return (phi_r * du - u_r * dphi) / s - radial_mean_curvature(state).values


###################################################################################################
# Boundary conditions
###################################################################################################

def apply_bcs(state: RadialState, config: RadialConfig) -> RadialState:
    """Overwrite boundary nodes so the discrete boundary conditions hold exactly.

    At the contact node the pair (u, phi) solves the 2x2 system made of u = 0 and the resolved
    angle condition with four point one-sided slopes.
    """
    beta, beta0 = config.angle.beta, config.angle.beta0
    u = state.u.copy()
    phi = state.phi.copy()
    grid = state.grid
    if grid.kind == LENS:
        # slopes at the last node: (11 f_N - c) / 6h
        sign = 1.0
        cu = slope_neighbours(u[-2], u[-3], u[-4])
        cphi = slope_neighbours(phi[-2], phi[-3], phi[-4])
        idx = -1
    else:
        # forward slopes at the first node: -(11 f_0 - c) / 6h
        sign = -1.0
        cu = slope_neighbours(u[1], u[2], u[3])
        cphi = slope_neighbours(phi[1], phi[2], phi[3])
        idx = 0
    # lens:      beta (11u - cu) + beta0 (11phi - cphi) = 0
    # exterior: -beta (11u - cu) + beta0 (11phi - cphi) = 0
    # with u = 0 the system is lower triangular
    if beta0 == 0.0:
        raise BcSolveFailure("contact node system singular: beta0 = 0")
    u[idx] = 0.0
    phi[idx] = (sign * beta * cu + beta0 * cphi) / (11 * beta0)

    outer = config.outer_bc
    if grid.kind == EXTERIOR:
        if outer.kind == PINNED:
            u[-1] = outer.u_out
        elif outer.kind == VERTICAL_WALL:
            u[-1] = slope_neighbours(u[-2], u[-3], u[-4]) / 11
        phi[-1] = outer.phi_out
    return state.copy_with(u=u, phi=phi)


def contact_slopes(state: RadialState) -> Tuple[float, float]:
    """(u_r, phi_r) at the contact node with the same stencils the boundary solve uses."""
    u, phi, h = state.u, state.phi, state.grid.spacing
    if state.grid.kind == LENS:
        return (float(backward_slope(u[-1], u[-2], u[-3], u[-4], h)),
                float(backward_slope(phi[-1], phi[-2], phi[-3], phi[-4], h)))
    return (float(-backward_slope(u[0], u[1], u[2], u[3], h)),
            float(-backward_slope(phi[0], phi[1], phi[2], phi[3], h)))


def angle_residual(state: RadialState, angle: ContactAngle) -> float:
    """|beta s - phi_r| at the contact node."""
    u_r, phi_r = contact_slopes(state)
    return abs(angle.beta * math.hypot(u_r, phi_r) - phi_r)


def squared_angle_residual(state: RadialState, angle: ContactAngle) -> float:
    """B = beta^2 u_r^2 - beta0^2 phi_r^2 at the contact node."""
    u_r, phi_r = contact_slopes(state)
    return angle.beta ** 2 * u_r ** 2 - angle.beta0 ** 2 * phi_r ** 2


###################################################################################################
# Time stepping
###################################################################################################

def stable_dt(state: RadialState, config: RadialConfig) -> float:
    """Explicit step from the largest eigenvalue of the inverse parameter metric,
    max(1/s^2, r^2/phi^2)."""
    u_r, _, phi_r, _ = derivatives(state)
    s2 = _stretch2(u_r, phi_r)
    r = state.grid.nodes
    lam = np.maximum(1.0 / s2, (r / state.phi) ** 2)
    return config.cfl_sigma * state.grid.spacing ** 2 / (2.0 * float(lam.max()))


def check_mesh(state: RadialState, config: RadialConfig) -> None:
    """Raise MeshDegeneracy when phi stops being a comfortably monotone map."""
    dphi = np.diff(state.phi)
    dr = state.grid.spacing
    mean_stretch = (state.phi[-1] - state.phi[0]) / (state.grid.nodes[-1] - state.grid.nodes[0])
    if mean_stretch <= 0 or np.any(dphi <= 0):
        raise MeshDegeneracy(f"phi lost monotonicity at t={state.t}")
    relative = float((dphi / dr).min() / mean_stretch)
    if relative < config.min_stretch:
        raise MeshDegeneracy(f"min phi_r is {relative:.3e} of the mean stretch at t={state.t}")


def advance(state: RadialState, config: RadialConfig, dt: float) -> RadialState:
    """One Heun step of size `dt`, boundary conditions re-imposed after each stage."""
    if dt < MIN_DT:
        raise StepUnderflow(f"time step {dt:.3e} below {MIN_DT}")
    k1_u, k1_phi = rhs_split_gauge(state)
    stage = apply_bcs(state.copy_with(u=state.u + dt * k1_u, phi=state.phi + dt * k1_phi), config)
    k2_u, k2_phi = rhs_split_gauge(stage)
    out = state.copy_with(
        t=state.t + dt,
        u=state.u + 0.5 * dt * (k1_u + k2_u),
        phi=state.phi + 0.5 * dt * (k1_phi + k2_phi),
    )
    out = apply_bcs(out, config)
    check_mesh(out, config)
    return out


def step(state: RadialState, config: RadialConfig) -> RadialState:
    return advance(state, config, stable_dt(state, config))


def run(config: RadialConfig, seed: RadialState) -> RunTrace:
    """Step the seed until t_end, extinction or a solver error.

    :param config:  Run configuration
    :param seed:    Initial state satisfying the contact and angle conditions to 1e-8
    :return:        Trace of the run
    """
    from src.contact_mcm.driver import RadialDriver, run_loop
    return run_loop(RadialDriver(config), seed)
