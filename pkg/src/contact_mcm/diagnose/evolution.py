"""
Residuals of the evolution equations of graph mean curvature motion.

Three snapshots at t - dt, t, t + dt are resampled as graphs w(y) on one Cartesian probe grid
inside D(t) and every tensor is rebuilt there by finite differences. With

    L = d_t - tr_g d^2      (d_t at fixed y, d^2 the flat Hessian)

the checked equations are

    L[v]      = -2 |Dv|^2_g / v - v |h|^2
    L[H]      = |h|^2 H
    L[|h|^2]  = -2 |nabla h|^2 + 2 |h|^4
    L[omega]  = |h|^2 omega
    L[g^ij]   = -2 |h|^2 omega^i omega^j + 2 (h^2)^ij
    d_t h^k_j (Weingarten operator, from the two equations above)
    d_t g^ij, d_t h_ij

together with the single-time connection relations (d_k g^ij, Christoffel symbols h_ij omega^k,
symmetry of nabla h, and the two forms of the Laplace-Beltrami operator). Contractions with an
upper index use g^-1; h^2, h^3 are `lower_power` products.

The equations for H and |h|^2 are often quoted with extra omega terms,

    H h^2(omega, omega) - H^2 h(omega, omega)    and    -4 H h^3(omega, omega) - 2 H |h|^2 h(omega, omega).

At fixed y the tangential drift of the graph parametrization cancels the first-order part of
Delta_g - tr_g d^2 for every scalar, so these terms do not belong there (a shrinking sphere has
L[H] = |h|^2 H exactly). The residual with the quoted terms is kept in each report's detail
under "with_omega_terms".
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.contact_mcm.diagnose.fields import State
from src.contact_mcm.diagnose.reconstruct import physical_spacing, probe_grid, reconstruct
from src.contact_mcm.diagnose.report import BoundReport, ResidualReport, max_abs
from src.contact_mcm.errors import InconsistentSnapshots
from src.contact_mcm.geometry import (GeometryFields, geometry_from_jets, graph_metric, lower_power,
                                      norm2_g, quadratic)
from src.contact_mcm.grid import CartesianGrid

logger = logging.getLogger(__name__)

DT_TOLERANCE = 1e-9
# c in the subsolution weight alpha = min(1, 1 / (4 c a0^2))
SUBSOLUTION_C = 1.0


def _check_triple(triple: Sequence[State]) -> float:
    if len(triple) != 3:
        raise InconsistentSnapshots(f"expected three snapshots, got {len(triple)}")
    grids = {repr(s.grid.describe()) for s in triple}
    if len(grids) != 1 or len({type(s) for s in triple}) != 1:
        raise InconsistentSnapshots("snapshots live on different grids")
    dt0 = triple[1].t - triple[0].t
    dt1 = triple[2].t - triple[1].t
    if dt0 <= 0 or abs(dt1 - dt0) > DT_TOLERANCE * max(abs(dt0), 1e-300):
        raise InconsistentSnapshots(f"non-uniform time steps {dt0!r}, {dt1!r}")
    return 0.5 * (dt0 + dt1)


###################################################################################################
# Tensor helpers on a Cartesian grid, tensor indices trailing
###################################################################################################

def _broadcast(ginv: np.ndarray, q: np.ndarray) -> np.ndarray:
    extra = q.ndim - 2
    return ginv.reshape(ginv.shape[:2] + (1,) * extra + (2, 2))


def trace_hessian(grid: CartesianGrid, ginv: np.ndarray, q: np.ndarray) -> np.ndarray:
    """g^mn d_m d_n q, componentwise for tensor-valued q."""
    return np.sum(_broadcast(ginv, q) * grid.hessian(q), axis=(-2, -1))


def directional(grid: CartesianGrid, omega: np.ndarray, q: np.ndarray) -> np.ndarray:
    """d_omega q, componentwise."""
    extra = q.ndim - 2
    om = omega.reshape(omega.shape[:2] + (1,) * extra + (2,))
    return np.sum(om * grid.gradient(q), axis=-1)


def covariant_h(grid: CartesianGrid, geom: GeometryFields) -> np.ndarray:
    """nabla_m h_ij, stored as [..., m, i, j].

    d_m h_ij = nabla_m h_ij + (h_jm h_ik + h_im h_jk) omega^k
    """
    h = geom.h
    hw = np.einsum("...ik,...k->...i", h, geom.omega)
    dh = np.moveaxis(grid.gradient(h), -1, -3)
    connection = np.einsum("...jm,...i->...mij", h, hw) + np.einsum("...im,...j->...mij", h, hw)
    return dh - connection


def norm2_3(ginv: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.einsum("...ma,...ib,...jc,...mij,...abc->...", ginv, ginv, ginv, t, t)


@dataclass(frozen=True)
class ProbeFields:
    """Graph geometry of one snapshot sampled on the probe grid."""
    grid: CartesianGrid
    w: np.ndarray
    geom: GeometryFields

    @classmethod
    def sample(cls, state: State, grid: CartesianGrid) -> ProbeFields:
        w = reconstruct(state, grid)
        dw, d2w = grid.surface_jets(w)
        return cls(grid, w, geometry_from_jets(dw, d2w, grid))

    @property
    def S(self) -> np.ndarray:
        return np.einsum("...ik,...kj->...ij", self.geom.ginv, self.geom.h)

    @property
    def h_norm2(self) -> np.ndarray:
        return norm2_g(self.geom.h, self.geom.ginv)

    def subsolution_weight(self, alpha: float) -> np.ndarray:
        nh = covariant_h(self.grid, self.geom)
        return alpha * norm2_3(self.geom.ginv, nh) + self.h_norm2


###################################################################################################
# Equations
###################################################################################################

Equation = Tuple[np.ndarray, np.ndarray]


def _equations(past: ProbeFields, now: ProbeFields, future: ProbeFields, dt: float) -> Dict[str, Equation]:
    """(lhs, rhs) fields per equation at the middle time."""
    grid = now.grid
    g = now.geom
    ginv, h, H, v, omega = g.ginv, g.h, g.H, g.v, g.omega

    def d_t(select):
        return (select(future) - select(past)) / (2.0 * dt)

    def L(select):
        return d_t(select) - trace_hessian(grid, ginv, select(now))

    S = now.S
    hn2 = now.h_norm2
    h2 = lower_power(h, ginv, 2)
    hw = np.einsum("...ij,...j->...i", h, omega)
    Sw = np.einsum("...ij,...j->...i", S, omega)
    nh = covariant_h(grid, g)

    out: Dict[str, Equation] = {}

    Dv = grid.gradient(v)
    out["evolution_v"] = (L(lambda p: p.geom.v),
                          -2.0 * quadratic(ginv, Dv) / v - v * hn2)
    out["evolution_H"] = (L(lambda p: p.geom.H), hn2 * H)
    out["evolution_h_norm2"] = (L(lambda p: p.h_norm2), -2.0 * norm2_3(ginv, nh) + 2.0 * hn2 ** 2)
    out["evolution_omega"] = (L(lambda p: p.geom.omega), hn2[..., None] * omega)
    h2_up = np.einsum("...ip,...pq,...qj->...ij", ginv, h2, ginv)
    out["evolution_ginv"] = (L(lambda p: p.geom.ginv),
                             -2.0 * hn2[..., None, None] * np.einsum("...i,...j->...ij", omega, omega)
                             + 2.0 * h2_up)

    # d_t g^ij
    DH = grid.gradient(H)
    grad_H = np.einsum("...ij,...j->...i", ginv, DH)
    sym = np.einsum("...i,...j->...ij", grad_H, omega) + np.einsum("...i,...j->...ij", omega, grad_H)
    sym_S = np.einsum("...i,...j->...ij", Sw, omega) + np.einsum("...i,...j->...ij", omega, Sw)
    rhs_ginv = -sym - H[..., None, None] * sym_S
    out["time_derivative_ginv"] = (d_t(lambda p: p.geom.ginv), rhs_ginv)

    # d_t h_ij
    hess_H = grid.hessian(H) - h * np.einsum("...k,...k->...", omega, DH)[..., None, None]
    nabla_omega_h = np.einsum("...m,...mij->...ij", omega, nh)
    Hx = H[..., None, None]
    rhs_h = (hess_H + Hx * nabla_omega_h
             + np.einsum("...i,...j->...ij", DH, hw) + np.einsum("...i,...j->...ij", hw, DH)
             + Hx * h2 + 2.0 * Hx * np.einsum("...i,...j->...ij", hw, hw))
    out["time_derivative_h"] = (d_t(lambda p: p.geom.h), rhs_h)

    # Weingarten operator h^k_j = g^ki h_ij
    rhs_S = (np.einsum("...ki,...ij->...kj", rhs_ginv, h) + np.einsum("...ki,...ij->...kj", ginv, rhs_h))
    out["evolution_weingarten"] = (d_t(lambda p: p.S), rhs_S)
    return out


def omega_terms(fields: ProbeFields) -> Dict[str, np.ndarray]:
    """The quoted omega terms of the H and |h|^2 equations, per equation name."""
    g = fields.geom
    h_ww = quadratic(g.h, g.omega)
    h2_ww = quadratic(lower_power(g.h, g.ginv, 2), g.omega)
    h3_ww = quadratic(lower_power(g.h, g.ginv, 3), g.omega)
    return {
        "evolution_H": g.H * h2_ww - g.H ** 2 * h_ww,
        "evolution_h_norm2": -4.0 * g.H * h3_ww - 2.0 * g.H * fields.h_norm2 * h_ww,
    }


def connection_equations(fields: ProbeFields) -> Dict[str, Equation]:
    """Single-time relations between the metric, its connection and h."""
    grid = fields.grid
    g = fields.geom
    S = fields.S
    omega = g.omega
    out: Dict[str, Equation] = {}

    rhs = -(np.einsum("...ik,...j->...ijk", S, omega) + np.einsum("...jk,...i->...ijk", S, omega))
    out["ginv_gradient"] = (grid.gradient(g.ginv), rhs)

    dg = grid.gradient(graph_metric(g.dw))  # [..., a, b, c] = d_c g_ab
    # lowered[..., k, i, j] = (d_i g_kj + d_j g_ki - d_k g_ij) / 2
    lowered = 0.5 * (np.moveaxis(dg, -1, -2) + dg - np.moveaxis(dg, -1, -3))
    christoffel = np.einsum("...kl,...lij->...kij", g.ginv, lowered)
    out["christoffel"] = (christoffel, np.einsum("...ij,...k->...kij", g.h, omega))

    nh = covariant_h(grid, g)
    out["codazzi"] = (nh, np.swapaxes(nh, -3, -2))

    f = g.H
    Df = grid.gradient(f)
    flux = g.v[..., None] * np.einsum("...ij,...j->...i", g.ginv, Df)
    divergence = np.einsum("...ii->...", grid.gradient(flux))
    out["laplace_beltrami"] = (divergence / g.v,
                               trace_hessian(grid, g.ginv, f) - g.H * np.einsum("...i,...i->...", omega, Df))
    return out


###################################################################################################
# Reports
###################################################################################################

@dataclass(frozen=True)
class ProbeSet:
    grid: CartesianGrid
    mask: np.ndarray
    spacing: float
    past: ProbeFields
    now: ProbeFields
    future: ProbeFields
    t: float
    dt: float


def probe_triple(triple: Sequence[State], spacing: Optional[float] = None) -> ProbeSet:
    """Resample three snapshots on a shared probe grid.

    :param spacing: Probe spacing; defaults to the solver spacing in physical units at the
                    middle snapshot
    :raises InconsistentSnapshots: mismatched grids or non-uniform time steps
    """
    dt = _check_triple(triple)
    if spacing is None:
        spacing = physical_spacing(triple[1])
    grid, mask = probe_grid(triple, spacing)
    past, now, future = (ProbeFields.sample(s, grid) for s in triple)
    logger.debug(f"probe grid {grid.nx}x{grid.ny} at spacing {spacing:.3e}, dt={dt:.3e}")
    return ProbeSet(grid, mask, spacing, past, now, future, float(triple[1].t), dt)


def _report(name: str, eq: Equation, probes: ProbeSet) -> ResidualReport:
    lhs, rhs = eq
    mask = probes.mask.reshape(probes.mask.shape + (1,) * (lhs.ndim - 2))
    mask = np.broadcast_to(mask, lhs.shape)
    scale = max(max_abs(lhs, mask), max_abs(rhs, mask))
    return ResidualReport(name, max_abs(lhs - rhs, mask), spacing=probes.spacing, scale=scale,
                          detail={"t": probes.t, "dt": probes.dt})


def evolution_residuals(triple: Sequence[State], spacing: Optional[float] = None) -> List[ResidualReport]:
    """One report per evolution equation and connection relation at the middle snapshot."""
    probes = probe_triple(triple, spacing)
    equations = _equations(probes.past, probes.now, probes.future, probes.dt)
    equations.update(connection_equations(probes.now))
    reports = [_report(name, eq, probes) for name, eq in equations.items()]
    quoted = omega_terms(probes.now)
    for report in reports:
        if report.identity in quoted:
            lhs, rhs = equations[report.identity]
            report.detail["with_omega_terms"] = max_abs(lhs - rhs - quoted[report.identity], probes.mask)
    return reports


def subsolution_check(triple: Sequence[State], a0: Optional[float] = None,
                      spacing: Optional[float] = None) -> BoundReport:
    """Upper bound C of (d_t - Delta_g)(alpha |nabla h|^2 + |h|^2) on the probe nodes.

    :param a0:  Bound on |h| over the run; defaults to the probe maximum at the middle time
    """
    probes = probe_triple(triple, spacing)
    now = probes.now
    if a0 is None:
        a0 = float(np.sqrt(now.h_norm2[probes.mask].max()))
    alpha = 1.0 if a0 == 0 else min(1.0, 1.0 / (4.0 * SUBSOLUTION_C * a0 * a0))
    f_past, f_now, f_future = (p.subsolution_weight(alpha) for p in (probes.past, now, probes.future))
    grid = probes.grid
    g = now.geom
    laplacian = trace_hessian(grid, g.ginv, f_now) - g.H * directional(grid, g.omega, f_now)
    heat = (f_future - f_past) / (2.0 * probes.dt) - laplacian
    C = float(heat[probes.mask].max())
    return BoundReport("subsolution", C, math.inf, math.isfinite(C),
                       {"alpha": alpha, "a0": a0, "t": probes.t})
