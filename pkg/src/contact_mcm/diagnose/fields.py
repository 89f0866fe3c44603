"""
Graph form of solver states.

The graph w = u o phi^-1 over D(t) is differentiated exactly through the chain rule on the
mapped reference grid: node (j, k) sits at the physical point y = phi(x_jk) and carries
w(y) = u(x_jk) together with

    Dw = Dphi^-T Du,     D2w_ab = A_ia A_jb (u_ij - w_c phi^c_ij),   A = Dphi^-1.

Radial states are lifted to the orthonormal frame (e_r, e_theta) of the physical radius
rho = phi(r). Fields live on rays: axis -1 of `rays(...)` runs from the inside toward the
free boundary, so the contact node is always the last one.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.contact_mcm.errors import ReconstructionFailure
from src.contact_mcm.geometry import ContactAngle, GeometryFields, geometry_from_jets
from src.contact_mcm.grid import EXTERIOR, PolarGrid, RadialGrid, inner_slope
from src.contact_mcm.planar import PlanarState
from src.contact_mcm.radial import RadialState, derivatives

State = Union[RadialState, PlanarState]


@dataclass(frozen=True)
class GraphJets:
    points: np.ndarray
    w: np.ndarray
    geom: GeometryFields
    # |d phi / d r| per node: physical speed of the reference rays
    ray_speed: np.ndarray
    grid: Union[RadialGrid, PolarGrid]

    @property
    def is_radial(self) -> bool:
        return isinstance(self.grid, RadialGrid)

    def rays(self, values: np.ndarray) -> np.ndarray:
        """View of a nodal field as (n_rays, n_along, ...) with the contact node last."""
        if self.is_radial:
            out = values[None]
            if self.grid.kind == EXTERIOR:
                out = out[:, ::-1]
            return out
        return np.swapaxes(values, 0, 1)

    @property
    def ray_spacing(self) -> float:
        return self.grid.spacing if self.is_radial else self.grid.dr

    def normal_derivative(self, values: np.ndarray) -> np.ndarray:
        """d_n at the contact nodes along the inner normal of D(t), one per ray.

        The reference rays meet the free boundary orthogonally, so the derivative along a ray
        divided by its speed is the normal derivative. The contact node itself is left out of the
        stencil.
        """
        f = self.rays(values)
        speed = self.rays(self.ray_speed)[:, -1]
        outward = inner_slope(f[:, -2], f[:, -3], f[:, -4], f[:, -5], self.ray_spacing)
        return -outward / speed.reshape(speed.shape + (1,) * (outward.ndim - 1))

    def boundary(self, values: np.ndarray) -> np.ndarray:
        return self.rays(values)[:, -1]

    def interior_mask(self, margin: int = 1) -> np.ndarray:
        """Nodes at least `margin` nodes away from every boundary of the reference grid."""
        mask = np.ones(self.w.shape, dtype=bool)
        if self.is_radial and self.grid.kind == EXTERIOR:
            mask[:margin] = False
            mask[-margin:] = False
        else:
            mask[-margin:] = False
        return mask


def radial_jets(state: RadialState, angle: Optional[ContactAngle] = None) -> GraphJets:
    u_r, u_rr, phi_r, phi_rr = derivatives(state)
    if np.any(phi_r <= 0):
        raise ReconstructionFailure("phi is not increasing, graph form undefined")
    w_rho = u_r / phi_r
    w_rhorho = (u_rr - w_rho * phi_rr) / phi_r ** 2
    n = len(state.u)
    dw = np.zeros((n, 2))
    dw[:, 0] = w_rho
    d2w = np.zeros((n, 2, 2))
    d2w[:, 0, 0] = w_rhorho
    d2w[:, 1, 1] = w_rho / state.phi
    points = np.zeros((n, 2))
    points[:, 0] = state.phi
    geom = geometry_from_jets(dw, d2w, state.grid, angle)
    return GraphJets(points, state.u.copy(), geom, np.abs(phi_r), state.grid)


def planar_jets(state: PlanarState, angle: Optional[ContactAngle] = None) -> GraphJets:
    grid = state.grid
    DF, D2F = grid.surface_jets(state.F)
    Dphi = DF[..., :2, :]
    Du = DF[..., 2, :]
    det = Dphi[..., 0, 0] * Dphi[..., 1, 1] - Dphi[..., 0, 1] * Dphi[..., 1, 0]
    if np.any(det <= 0):
        raise ReconstructionFailure("phi is not orientation preserving, graph form undefined")
    A = np.linalg.inv(Dphi)
    dw = np.einsum("...i,...ib->...b", Du, A)
    inner = D2F[..., 2, :, :] - np.einsum("...c,...cij->...ij", dw, D2F[..., :2, :, :])
    d2w = np.einsum("...ia,...ij,...jb->...ab", A, inner, A)
    d2w = 0.5 * (d2w + np.swapaxes(d2w, -1, -2))
    points = np.stack((state.phi1, state.phi2), axis=-1)
    polar = grid.polar_derivatives(np.stack((state.phi1, state.phi2), axis=-1))
    speed = np.linalg.norm(polar["r"], axis=-1)
    geom = geometry_from_jets(dw, d2w, grid, angle)
    return GraphJets(points, state.u.copy(), geom, speed, grid)


def graph_jets(state: State, angle: Optional[ContactAngle] = None) -> GraphJets:
    if isinstance(state, PlanarState):
        return planar_jets(state, angle)
    return radial_jets(state, angle)


def inner_normal(jets: GraphJets) -> np.ndarray:
    """Euclidean inner unit normal of D(t) at the contact nodes, Dw / |Dw|."""
    dw = jets.boundary(jets.geom.dw)
    length = np.linalg.norm(dw, axis=-1)
    if np.any(length == 0):
        raise ReconstructionFailure("flat contact node: no normal direction")
    return dw / length[:, None]


def rotate_quarter(vectors: np.ndarray) -> np.ndarray:
    return np.stack((-vectors[..., 1], vectors[..., 0]), axis=-1)
