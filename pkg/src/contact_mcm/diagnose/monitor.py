"""
Per-step diagnostics recorded into the run trace.
"""
from __future__ import annotations
import math
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from src.contact_mcm.diagnose.fields import (GraphJets, State, graph_jets, inner_normal,
                                             rotate_quarter)
from src.contact_mcm.diagnose.support import support_radius, support_values
from src.contact_mcm.geometry import (ContactAngle, angle_operator, norm2_g, orthogonality_operator,
                                      quadratic, sym2_eigvals)
from src.contact_mcm.grid import LENS
from src.contact_mcm.planar import PlanarState, jacobian_determinant
from src.contact_mcm.radial import RadialState, angle_residual, catenoid_profile
from src.contact_mcm.trace import StepRecord


def domain_integral(state: State, values: np.ndarray) -> float:
    """Integral over D(t) of a nodal field, pulled back to the reference domain."""
    if isinstance(state, PlanarState):
        grid = state.grid
        weights = np.full(grid.n_r, grid.dr) * grid.r
        weights[-1] *= 0.5
        # half trapezoid weight at r0 plus the pole segment [0, r0]
        weights[0] = 0.5 * grid.dr * grid.r[0] + 0.5 * grid.r[0] * grid.r[0]
        integrand = values * jacobian_determinant(state)
        return float(np.sum(integrand * weights[:, None]) * grid.dtheta)
    r = state.grid.nodes
    phi_r = state.grid.d_dr(state.phi, -1)
    integrand = 2 * math.pi * values * state.phi * phi_r
    total = trapezoid(integrand, r)
    if state.grid.kind == LENS:
        # integrand vanishes linearly at the pole
        total += 0.5 * r[0] * integrand[0]
    return float(total)


def enclosed_volume(state: State) -> float:
    """Volume between the graph and the plane."""
    return domain_integral(state, state.u)


def catenoid_drift(state: RadialState, skip_contact: bool = False) -> float:
    """max |u - u_cat(phi)|: distance of the stored surface from the stationary catenoid.

    With `skip_contact` the contact node, which the boundary solve moves off the exact profile,
    is left out.
    """
    u, phi = state.u, state.phi
    if skip_contact:
        keep = np.arange(len(u)) != state.grid.contact_index
        u, phi = u[keep], phi[keep]
    return float(np.abs(u - catenoid_profile(phi)).max())


def planar_boundary_residuals(state: PlanarState, angle: ContactAngle):
    """(max |N^3 - beta|, max |B|, max |<D_tau phi, D_n phi>|) over the boundary ring."""
    grid = state.grid
    DF = grid.gradient(state.F)[-1]
    nt = np.cross(DF[..., :, 0], DF[..., :, 1])
    N3 = nt[:, 2] / np.linalg.norm(nt, axis=-1)
    B = angle_operator(DF, angle)
    theta = grid.theta
    normal = -np.stack((np.cos(theta), np.sin(theta)), axis=-1)
    tangent = np.stack((-np.sin(theta), np.cos(theta)), axis=-1)
    orth = orthogonality_operator(DF[:, :2, :], normal, tangent)
    return float(np.abs(N3 - angle.beta).max()), float(np.abs(B).max()), float(np.abs(orth).max())


def tangential_curvature_derivative(jets: GraphJets) -> np.ndarray:
    """|(nabla_tau h)(tau, tau)| at the contact nodes (zero for radial states)."""
    if jets.is_radial:
        return np.zeros(1)
    grid = jets.grid
    h_ring = jets.geom.h[-1]
    y_ring = jets.points[-1]
    dy = (np.roll(y_ring, -1, axis=0) - np.roll(y_ring, 1, axis=0)) / (2 * grid.dtheta)
    speed = np.linalg.norm(dy, axis=-1)
    tau = dy / speed[:, None]
    dh = (np.roll(h_ring, -1, axis=0) - np.roll(h_ring, 1, axis=0)) / (2 * grid.dtheta) / speed[:, None, None]
    omega = jets.geom.omega[-1]
    ginv = jets.geom.ginv[-1]
    h_tau_omega = np.einsum("kij,ki,kj->k", h_ring, tau, omega)
    cov = quadratic(dh, tau) - 2 * quadratic(h_ring, tau) * h_tau_omega
    # tau is g-unit on the boundary since it is orthogonal to Dw
    tau_norm2 = np.einsum("kij,ki,kj->k", np.linalg.inv(ginv), tau, tau)
    return np.abs(cov) / tau_norm2 ** 1.5


def continuation_values(jets: GraphJets) -> np.ndarray:
    """|h|_g + |(nabla_tau h)(tau, tau)| at the contact nodes."""
    h_norm = np.sqrt(jets.boundary(norm2_g(jets.geom.h, jets.geom.ginv)))
    return h_norm + tangential_curvature_derivative(jets)


def step_record(state: State, angle: ContactAngle, step: int, dt: float,
                origin: Optional[Sequence[float]] = None) -> StepRecord:
    jets = graph_jets(state, angle)
    geom = jets.geom
    _, h_eig = sym2_eigvals(geom.h)
    h_norm2 = norm2_g(geom.h, geom.ginv)
    f = h_norm2 * geom.v ** 2
    # one cell of slack next to the boundary
    interior = jets.interior_mask(margin=2)
    cont = continuation_values(jets)

    if isinstance(state, PlanarState):
        angle_res, _, orth_res = planar_boundary_residuals(state, angle)
        radius = state.radius
        min_jac = float(jacobian_determinant(state).min())
        p = support_values(jets, _planar_origin(origin))
        g_max = support_radius(jets, _planar_origin(origin))
    else:
        angle_res = angle_residual(state, angle)
        orth_res = 0.0
        radius = state.radius
        min_jac = float(np.diff(state.phi).min() / state.grid.spacing)
        p = support_values(jets)
        g_max = support_radius(jets)

    return StepRecord(
        step=step,
        t=float(state.t),
        dt=float(dt),
        radius=float(radius),
        sup_v=float(geom.v.max()),
        H_min=float(geom.H.min()),
        H_max=float(geom.H.max()),
        h_eig_max=float(h_eig.max()),
        angle_res=float(angle_res),
        orth_res=float(orth_res),
        p_min=float(p.min()),
        cont_fn=float(cont.max()),
        sup_w=float(state.u.max()),
        min_w=float(state.u.min()),
        volume=enclosed_volume(state),
        h_norm_max=float(np.sqrt(h_norm2.max())),
        f_interior=float(f[interior].max()),
        f_boundary=float(f[~interior].max()),
        H_boundary=float(jets.boundary(geom.H).mean()),
        min_jacobian=min_jac,
        p_max=float(p.max()),
        G_max=g_max,
    )


def _planar_origin(origin: Optional[Sequence[float]]):
    if origin is None:
        return (0.0, 0.0, 0.0)
    return tuple(origin) + (0.0,) * (3 - len(origin))


def boundary_frame(jets: GraphJets):
    """(n, tau) per contact node."""
    n = inner_normal(jets)
    return n, rotate_quarter(n)
