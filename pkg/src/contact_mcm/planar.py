"""
Two dimensional split-gauge solver over the reference unit disk.

The state F = [phi1, phi2, u] is sampled on a cell-centered polar grid and evolves by
F_t = g^ij(DF) F_ij in Cartesian reference coordinates. The boundary ring carries three
conditions per node, solved by damped Newton after every stage:

    u = 0,    N^3(DF) = beta,    <D_tau phi, D_n phi> = 0

with n = -e_r, tau = e_theta the fixed circle frame of the reference disk.

Near the pole the angular spacing r * dtheta is much finer than dr. Per ring, the angular
Fourier modes of the right-hand side whose second-difference symbol exceeds the radial one
are dropped (modes 0 and 1 are always kept), so the explicit step scales with dr^2.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
from scipy.interpolate import make_interp_spline

from src.contact_mcm.errors import DomainError, MeshDegeneracy, NewtonDivergence, StepUnderflow
from src.contact_mcm.geometry import ContactAngle, param_metric
from src.contact_mcm.grid import LENS, PolarGrid, slope_neighbours

if TYPE_CHECKING:
    from src.contact_mcm.radial import RadialState
    from src.contact_mcm.trace import RunTrace

logger = logging.getLogger(__name__)

MIN_DT = 1e-14
MAX_SWEEPS = 200


@dataclass(frozen=True)
class PlanarConfig:
    angle: ContactAngle
    n_r: int
    n_theta: int
    cfl_sigma: float = 0.4
    t_end: float = 1.0
    newton_tol: float = 1e-12
    newton_max_iters: int = 20
    min_jacobian: float = 0.05
    snapshot_every: int = 0
    extinction_radius: float = 1e-3
    max_steps: int = 50_000_000
    record_every: int = 1
    snapshot_times: Tuple[float, ...] = ()
    origin: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.n_r < 16:
            raise DomainError(f"n_r must satisfy n_r >= 16, got {self.n_r}")
        if self.n_theta < 32 or self.n_theta % 2:
            raise DomainError(f"n_theta must be even and >= 32, got {self.n_theta}")
        if not 0.0 < self.cfl_sigma <= 0.5:
            raise DomainError(f"cfl_sigma must satisfy 0 < cfl_sigma <= 0.5, got {self.cfl_sigma}")
        if self.t_end < 0:
            raise DomainError(f"t_end must be non-negative, got {self.t_end}")

    @property
    def grid(self) -> PolarGrid:
        return PolarGrid(self.n_r, self.n_theta)


@dataclass(frozen=True)
class PlanarState:
    t: float
    phi1: np.ndarray
    phi2: np.ndarray
    u: np.ndarray
    grid: PolarGrid

    @property
    def F(self) -> np.ndarray:
        """Stacked components, shape (n_r, n_theta, 3)."""
        return np.stack((self.phi1, self.phi2, self.u), axis=-1)

    @classmethod
    def from_stack(cls, t: float, F: np.ndarray, grid: PolarGrid) -> PlanarState:
        return cls(t, F[..., 0].copy(), F[..., 1].copy(), F[..., 2].copy(), grid)

    @property
    def boundary_centroid(self) -> np.ndarray:
        return np.array([self.phi1[-1].mean(), self.phi2[-1].mean()])

    @property
    def radius(self) -> float:
        """Mean distance of the boundary ring from its centroid."""
        c = self.boundary_centroid
        return float(np.hypot(self.phi1[-1] - c[0], self.phi2[-1] - c[1]).mean())

    def copy_with(self, **changes) -> PlanarState:
        return replace(self, **changes)


###################################################################################################
# Interior
###################################################################################################

@lru_cache(maxsize=16)
def _angular_mask(n_r: int, n_theta: int) -> np.ndarray:
    """Modes kept per ring: m with 4 sin^2(m dtheta/2) / (r dtheta)^2 <= 4 / dr^2, and m <= 1."""
    grid = PolarGrid(n_r, n_theta)
    m = np.arange(n_theta // 2 + 1)
    symbol = np.sin(0.5 * m[None, :] * grid.dtheta) ** 2 / (grid.r[:, None] * grid.dtheta) ** 2
    keep = symbol <= 1.0 / grid.dr ** 2
    keep[:, :2] = True
    return keep


def filter_angular_modes(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Drop the unresolvable angular modes ring by ring (axis 1 is theta)."""
    mask = _angular_mask(grid.n_r, grid.n_theta)
    spectrum = np.fft.rfft(values, axis=1)
    spectrum = spectrum * mask.reshape(mask.shape + (1,) * (values.ndim - 2))
    return np.fft.irfft(spectrum, n=grid.n_theta, axis=1)


def _jets(F: np.ndarray, grid: PolarGrid) -> Tuple[np.ndarray, np.ndarray]:
    """(DF, D2F): shapes (n_r, n_theta, 3, 2) and (n_r, n_theta, 3, 2, 2)."""
    return grid.surface_jets(F)


def planar_rhs(state: PlanarState, filtered: bool = True) -> np.ndarray:
    """dF/dt at interior nodes, zero on the boundary ring.

    :param state:       Current state
    :param filtered:    Apply the angular mode filter
    :return:            Array of shape (n_r, n_theta, 3)
    """
    grid = state.grid
    DF, D2F = _jets(state.F, grid)
    _, ginv = param_metric(DF[:-1])
    rhs = np.zeros(grid.shape + (3,))
    rhs[:-1] = np.einsum("...ij,...aij->...a", ginv, D2F[:-1])
    if filtered:
        rhs = filter_angular_modes(rhs, grid)
        rhs[-1] = 0.0
    return rhs


def jacobian_determinant(state: PlanarState) -> np.ndarray:
    D1 = state.grid.gradient(state.phi1)
    D2 = state.grid.gradient(state.phi2)
    return D1[..., 0] * D2[..., 1] - D1[..., 1] * D2[..., 0]


def stable_dt(state: PlanarState, config: PlanarConfig) -> float:
    """dt = sigma dr^2 / (2 max lambda_max(g^-1)) over interior nodes."""
    DF, _ = _jets(state.F, state.grid)
    _, ginv = param_metric(DF[:-1])
    a, b, c = ginv[..., 0, 0], ginv[..., 0, 1], ginv[..., 1, 1]
    lam = 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return config.cfl_sigma * state.grid.dr ** 2 / (2.0 * float(lam.max()))


###################################################################################################
# Boundary ring
###################################################################################################

def _boundary_system(X: np.ndarray, c: np.ndarray, a: np.ndarray, dr: float,
                     angle: ContactAngle) -> Tuple[np.ndarray, np.ndarray]:
    """Residual and Jacobian of the boundary conditions at every ring node.

    :param X:   Boundary values (n_theta, 3)
    :param c:   18 F_{N-1} - 9 F_{N-2} + 2 F_{N-3}, so F_r = (11 X - c) / 6dr
    :param a:   Tangential derivative F_theta on the ring, held fixed
    :return:    (R with shape (n_theta, 3), dR/dX with shape (n_theta, 3, 3))
    """
    k = 11.0 / (6.0 * dr)
    F_r = (11.0 * X - c) / (6.0 * dr)
    nt = np.cross(F_r, a)
    length = np.linalg.norm(nt, axis=-1)
    N = nt / length[:, None]

    R = np.empty_like(X)
    R[:, 0] = X[:, 2]
    R[:, 1] = N[:, 2] - angle.beta
    R[:, 2] = np.einsum("ka,ka->k", a[:, :2], F_r[:, :2])

    J = np.zeros(X.shape + (3,))
    J[:, 0, 2] = 1.0
    for m in range(3):
        e = np.zeros(3)
        e[m] = 1.0
        dnt = k * np.cross(np.broadcast_to(e, a.shape), a)
        J[:, 1, m] = (dnt[:, 2] - N[:, 2] * np.einsum("ka,ka->k", N, dnt)) / length
    J[:, 2, :2] = k * a[:, :2]
    return R, J


def boundary_residuals(state: PlanarState, angle: ContactAngle) -> np.ndarray:
    """Residuals (u, N^3 - beta, orthogonality) per ring node with the current tangents."""
    F = state.F
    c = slope_neighbours(F[-2], F[-3], F[-4])
    a = state.grid.d_theta(F)[-1]
    R, _ = _boundary_system(F[-1], c, a, state.grid.dr, angle)
    return R


def boundary_newton(state: PlanarState, config: PlanarConfig) -> Tuple[PlanarState, int]:
    """Solve the boundary ring conditions.

    Each sweep freezes the tangential derivatives, solves the 3x3 system at every node with
    damped Newton, then refreshes the tangents. Sweeps stop once the refreshed residual is
    below `newton_tol`.

    :return: (projected state, total Newton iterations)
    :raises NewtonDivergence: iteration cap reached or singular Jacobian
    """
    grid = state.grid
    F = state.F
    c = slope_neighbours(F[-2], F[-3], F[-4])
    tol = config.newton_tol
    iterations = 0
    for _ in range(MAX_SWEEPS):
        a = grid.d_theta(F)[-1]
        X = F[-1].copy()
        R, J = _boundary_system(X, c, a, grid.dr, config.angle)
        if np.abs(R).max() <= tol:
            return PlanarState.from_stack(state.t, F, grid), iterations
        for _ in range(config.newton_max_iters):
            try:
                delta = np.linalg.solve(J, -R[..., None])[..., 0]
            except np.linalg.LinAlgError as e:
                raise NewtonDivergence(f"singular boundary Jacobian: {e}")
            norm = np.linalg.norm(R, axis=-1)
            lam = np.ones(len(X))
            for _ in range(8):
                R_trial, _ = _boundary_system(X + lam[:, None] * delta, c, a, grid.dr, config.angle)
                worse = (np.linalg.norm(R_trial, axis=-1) >= norm) & (norm > tol)
                if not worse.any():
                    break
                lam[worse] *= 0.5
            X = X + lam[:, None] * delta
            iterations += 1
            R, J = _boundary_system(X, c, a, grid.dr, config.angle)
            if np.abs(R).max() <= tol:
                break
        else:
            raise NewtonDivergence(
                f"boundary Newton hit {config.newton_max_iters} iterations, residual {np.abs(R).max():.3e}")
        F = F.copy()
        F[-1] = X
    raise NewtonDivergence(f"boundary sweeps did not settle in {MAX_SWEEPS} passes")


###################################################################################################
# Stepping
###################################################################################################

def advance(state: PlanarState, config: PlanarConfig, dt: float,
            jacobian_floor: float = 0.0) -> PlanarState:
    """One Heun step with the boundary Newton after each stage."""
    if dt < MIN_DT:
        raise StepUnderflow(f"time step {dt:.3e} below {MIN_DT}")
    grid = state.grid
    F = state.F
    k1 = planar_rhs(state)
    stage, _ = boundary_newton(PlanarState.from_stack(state.t + dt, F + dt * k1, grid), config)
    k2 = planar_rhs(stage)
    out, _ = boundary_newton(PlanarState.from_stack(state.t + dt, F + 0.5 * dt * (k1 + k2), grid), config)
    det = jacobian_determinant(out)
    if det.min() <= jacobian_floor:
        raise MeshDegeneracy(f"min Jacobian {det.min():.3e} at or below {jacobian_floor:.3e} at t={out.t}")
    return out


def planar_step(state: PlanarState, config: PlanarConfig, jacobian_floor: float = 0.0) -> PlanarState:
    return advance(state, config, stable_dt(state, config), jacobian_floor)


def planar_run(config: PlanarConfig, seed: PlanarState) -> RunTrace:
    from src.contact_mcm.driver import PlanarDriver, run_loop
    return run_loop(PlanarDriver(config), seed)


###################################################################################################
# Lifting radial states
###################################################################################################

def radial_embedding(radial_state: RadialState, n_theta: int, n_r: Optional[int] = None) -> PlanarState:
    """Lift a lens state phi(r) e_r, u(r) onto the polar grid.

    With `n_r` equal to the radial node count the radial nodes coincide and the lift is exact;
    otherwise the profiles are interpolated by quintic splines through their pole reflections.
    """
    src = radial_state.grid
    if src.kind != LENS:
        raise DomainError("only lens states live on the unit disk")
    grid = PolarGrid(src.n_nodes if n_r is None else n_r, n_theta)
    if grid.n_r == src.n_nodes:
        phi, u = radial_state.phi, radial_state.u
    else:
        r_ext = np.concatenate((-src.nodes[::-1], src.nodes))
        phi = make_interp_spline(r_ext, np.concatenate((-radial_state.phi[::-1], radial_state.phi)), k=5)(grid.r)
        u = make_interp_spline(r_ext, np.concatenate((radial_state.u[::-1], radial_state.u)), k=5)(grid.r)
    cos_t, sin_t = np.cos(grid.theta), np.sin(grid.theta)
    return PlanarState(
        radial_state.t,
        phi[:, None] * cos_t[None, :],
        phi[:, None] * sin_t[None, :],
        np.repeat(u[:, None], n_theta, axis=1),
        grid,
    )
