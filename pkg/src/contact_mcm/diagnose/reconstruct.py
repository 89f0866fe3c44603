"""
Eulerian reconstruction of the graph w = u o phi^-1 at arbitrary physical points.

Radial states are interpolated by a quintic spline of u against phi (reflected through the
pole for lenses). Planar states are interpolated by bivariate quintic splines on the polar
reference grid, padded with pole and periodic ghost rows, and phi is inverted pointwise by
Newton iteration started from the nearest grid node.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline
from scipy.spatial import cKDTree

from src.contact_mcm.diagnose.fields import State
from src.contact_mcm.errors import ReconstructionFailure
from src.contact_mcm.grid import EXTERIOR, LENS, CartesianGrid
from src.contact_mcm.planar import PlanarState
from src.contact_mcm.radial import RadialState

logger = logging.getLogger(__name__)

SPLINE_DEGREE = 5
PAD = 6
NEWTON_TOL = 1e-13
NEWTON_MAX_ITERS = 30
FD_STEP = 1e-7

Sampler = Callable[[np.ndarray], np.ndarray]


def radial_sampler(state: RadialState) -> Sampler:
    phi, u = state.phi, state.u
    if state.grid.kind == LENS:
        knots = np.concatenate((-phi[::-1], phi))
        values = np.concatenate((u[::-1], u))
        lo, hi = 0.0, phi[-1]
    else:
        knots, values = phi, u
        lo, hi = phi[0], phi[-1]
    if np.any(np.diff(knots) <= 0):
        raise ReconstructionFailure("phi is not increasing, graph form undefined")
    spline = make_interp_spline(knots, values, k=SPLINE_DEGREE)

    def sample(points: np.ndarray) -> np.ndarray:
        rho = np.linalg.norm(points, axis=-1)
        if np.any(rho > hi * (1 + 1e-12)) or np.any(rho < lo * (1 - 1e-12)):
            raise ReconstructionFailure("probe points outside D(t)")
        return spline(rho)

    return sample


@dataclass(frozen=True)
class PolarSpline:
    """Quintic spline of a polar-grid field, valid for r in [0, 1] and every theta."""
    spline: RectBivariateSpline

    @classmethod
    def fit(cls, values: np.ndarray, r: np.ndarray, theta: np.ndarray) -> PolarSpline:
        n_theta = len(theta)
        pad_r = min(PAD, len(r))
        ghost = np.roll(values[:pad_r][::-1], -n_theta // 2, axis=1)
        r_ext = np.concatenate((-r[:pad_r][::-1], r))
        padded = np.concatenate((ghost, values), axis=0)
        dtheta = theta[1] - theta[0]
        theta_ext = np.concatenate((theta[-PAD:] - n_theta * dtheta, theta, theta[:PAD] + n_theta * dtheta))
        padded = np.concatenate((padded[:, -PAD:], padded, padded[:, :PAD]), axis=1)
        return cls(RectBivariateSpline(r_ext, theta_ext, padded, kx=SPLINE_DEGREE, ky=SPLINE_DEGREE, s=0))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at reference Cartesian points `x` (..., 2)."""
        r = np.hypot(x[..., 0], x[..., 1])
        theta = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
        return self.spline.ev(r.ravel(), theta.ravel()).reshape(r.shape)


def planar_sampler(state: PlanarState) -> Sampler:
    grid = state.grid
    s1 = PolarSpline.fit(state.phi1, grid.r, grid.theta)
    s2 = PolarSpline.fit(state.phi2, grid.r, grid.theta)
    su = PolarSpline.fit(state.u, grid.r, grid.theta)
    nodes = grid.points.reshape(-1, 2)
    tree = cKDTree(np.stack((state.phi1, state.phi2), axis=-1).reshape(-1, 2))

    def phi(x: np.ndarray) -> np.ndarray:
        return np.stack((s1(x), s2(x)), axis=-1)

    def sample(points: np.ndarray) -> np.ndarray:
        shape = points.shape[:-1]
        y = points.reshape(-1, 2)
        _, idx = tree.query(y)
        x = nodes[idx].copy()
        for _ in range(NEWTON_MAX_ITERS):
            res = phi(x) - y
            if np.abs(res).max() <= NEWTON_TOL * max(1.0, float(np.abs(y).max())):
                break
            jac = np.empty((len(x), 2, 2))
            for i in range(2):
                e = np.zeros(2)
                e[i] = FD_STEP
                jac[:, :, i] = (phi(x + e) - phi(x - e)) / (2 * FD_STEP)
            x = x - np.linalg.solve(jac, res[..., None])[..., 0]
        else:
            raise ReconstructionFailure(f"phi inversion did not converge, residual {np.abs(res).max():.3e}")
        if np.any(np.hypot(x[:, 0], x[:, 1]) > 1.0 + 1e-12):
            raise ReconstructionFailure("probe points outside D(t)")
        return su(x).reshape(shape)

    return sample


def graph_sampler(state: State) -> Sampler:
    if isinstance(state, PlanarState):
        return planar_sampler(state)
    return radial_sampler(state)


###################################################################################################
# Probe grids
###################################################################################################

def physical_spacing(state: State) -> float:
    """Reference spacing scaled to D(t)."""
    if isinstance(state, PlanarState):
        return state.grid.dr * state.radius
    if state.grid.kind == LENS:
        return state.grid.spacing * state.radius
    return state.grid.spacing


def _center_and_inradius(state: State) -> Tuple[np.ndarray, float]:
    if isinstance(state, PlanarState):
        c = state.boundary_centroid
        return c, float(np.hypot(state.phi1[-1] - c[0], state.phi2[-1] - c[1]).min())
    return np.zeros(2), state.radius


def probe_grid(states: Sequence[State], spacing: float, margin: int = 6,
               clearance: float = 0.1) -> Tuple[CartesianGrid, np.ndarray]:
    """Cartesian grid inside D(t) for every state, at least `clearance` times the boundary
    radius away from the free boundary.

    :return: (grid, mask of probe nodes at least `margin` nodes from the grid edge)
    """
    first = states[0]
    exterior = isinstance(first, RadialState) and first.grid.kind == EXTERIOR
    if exterior:
        inner = max(s.radius for s in states)
        outer = min(float(s.phi[-1]) for s in states)
        a_in = (1 + clearance) * inner
        a_out = (1 - 0.5 * clearance) * outer
        # largest square [c - a, c + a] x [-a, a] with c - a = a_in and its far corner inside a_out
        disc = 16 * a_in ** 2 - 20 * (a_in ** 2 - a_out ** 2)
        half = (-4 * a_in + np.sqrt(disc)) / 10
        center = np.array([a_in + half, 0.0])
    else:
        centers_radii = [_center_and_inradius(s) for s in states]
        center = centers_radii[0][0]
        inradius = min(r - np.linalg.norm(c - center) for c, r in centers_radii)
        half = (1 - clearance) * inradius / np.sqrt(2)
    n = 2 * int(np.floor(half / spacing)) + 1
    if n < 2 * margin + 3:
        raise ReconstructionFailure(f"probe region holds only {n} nodes per side at spacing {spacing:.3e}")
    offset = 0.5 * (n - 1) * spacing
    grid = CartesianGrid(float(center[0] - offset), float(center[1] - offset), float(spacing), n, n)
    mask = np.zeros(grid.shape, dtype=bool)
    mask[margin:-margin, margin:-margin] = True
    return grid, mask


def reconstruct(state: State, grid: CartesianGrid) -> np.ndarray:
    """w(y, t) at the nodes of a Cartesian grid inside D(t)."""
    return graph_sampler(state)(grid.points)
