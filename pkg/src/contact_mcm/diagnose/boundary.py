"""
Identities satisfied on the free boundary by solutions of the flow.

With n the inner unit normal of D(t), tau the unit tangent and h_nn = h(n, n):

    h(n, tau) = 0
    d_n H = (beta^2 / beta0) H h_nn
    beta0 d_n h(tau, tau) = -h(tau, tau)^2 + beta^2 h_nn h(tau, tau)
    beta0 d_n h(n, n) = |h|^2 / beta^2 + 2 beta0^2 h_nn^2
    (beta0 / 2) d_n |h|^2 = 2 beta^2 |h|^2 h_nn - tr_g h^3

They follow from differentiating the contact and angle conditions in time, so they hold on
states that are already moving under the flow, not on arbitrary seeds.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.contact_mcm.diagnose.fields import GraphJets, State, graph_jets, inner_normal, rotate_quarter
from src.contact_mcm.diagnose.reconstruct import physical_spacing
from src.contact_mcm.diagnose.report import ResidualReport, max_abs
from src.contact_mcm.geometry import ContactAngle, lower_power, norm2_g, quadratic, trace_g
from src.contact_mcm.grid import inner_slope

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundaryFrameFields:
    n: np.ndarray
    tau: np.ndarray
    h_nn: np.ndarray
    h_tt: np.ndarray
    h_nt: np.ndarray
    H: np.ndarray
    v: np.ndarray

    @classmethod
    def from_jets(cls, jets: GraphJets) -> BoundaryFrameFields:
        n = inner_normal(jets)
        tau = rotate_quarter(n)
        h = jets.boundary(jets.geom.h)
        return cls(n, tau, quadratic(h, n), quadratic(h, tau), quadratic(h, n, tau),
                   jets.boundary(jets.geom.H), jets.boundary(jets.geom.v))


def _pair(lhs: np.ndarray, rhs: np.ndarray, name: str, spacing: float, **detail) -> ResidualReport:
    scale = max(max_abs(lhs), max_abs(rhs))
    return ResidualReport(name, max_abs(lhs - rhs), spacing=spacing, scale=scale, detail=dict(detail))


def boundary_identity_residuals(jets: GraphJets, angle: ContactAngle) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Pointwise residual (lhs, rhs) per identity at the contact nodes."""
    frame = BoundaryFrameFields.from_jets(jets)
    geom = jets.geom
    n = frame.n
    beta2, beta0 = angle.beta ** 2, angle.beta0
    h_norm2 = norm2_g(geom.h, geom.ginv)
    tr_h3 = trace_g(lower_power(geom.h, geom.ginv, 3), geom.ginv)
    # h(tau, tau) and h(n, n) along each ray with the frame of its contact node
    h_rays = jets.rays(geom.h)
    h_tt_ray = np.einsum("kaij,ki,kj->ka", h_rays, frame.tau, frame.tau)
    h_nn_ray = np.einsum("kaij,ki,kj->ka", h_rays, n, n)
    d_n = _ray_normal_derivative(jets)

    hn2_b = jets.boundary(h_norm2)
    return {
        "h_split": (frame.h_nt, np.zeros_like(frame.h_nt)),
        "normal_derivative_H": (jets.normal_derivative(geom.H), beta2 / beta0 * frame.H * frame.h_nn),
        "normal_derivative_h_tt": (beta0 * d_n(h_tt_ray), -frame.h_tt ** 2 + beta2 * frame.h_nn * frame.h_tt),
        "normal_derivative_h_nn": (beta0 * d_n(h_nn_ray), hn2_b / beta2 + 2 * beta0 ** 2 * frame.h_nn ** 2),
        "normal_derivative_h_norm2": (0.5 * beta0 * jets.normal_derivative(h_norm2),
                                      2 * beta2 * hn2_b * frame.h_nn - jets.boundary(tr_h3)),
    }


def _ray_normal_derivative(jets: GraphJets):
    """d_n of a field already laid out along the rays, (n_rays, n_along)."""
    speed = jets.rays(jets.ray_speed)[:, -1]

    def d_n(f: np.ndarray) -> np.ndarray:
        return -inner_slope(f[:, -2], f[:, -3], f[:, -4], f[:, -5], jets.ray_spacing) / speed

    return d_n


def check_boundary_identities(snapshot: State, angle: ContactAngle,
                              spacing: Optional[float] = None) -> List[ResidualReport]:
    """One report per free-boundary identity, judged by the single-level rule.

    :param spacing: Spacing used by the pass rule, default the physical solver spacing
    """
    jets = graph_jets(snapshot, angle)
    if spacing is None:
        spacing = physical_spacing(snapshot)
    reports = []
    for name, (lhs, rhs) in boundary_identity_residuals(jets, angle).items():
        report = _pair(lhs, rhs, name, spacing, t=float(snapshot.t))
        if not report.passed:
            logger.debug(f"boundary identity {name} residual {report.residual:.3e} at t={snapshot.t}")
        reports.append(report)
    return reports


def boundary_identity_maxima(snapshot: State, angle: ContactAngle) -> Dict[str, float]:
    """Max residual per identity, for refinement sweeps."""
    jets = graph_jets(snapshot, angle)
    return {name: max_abs(lhs - rhs) for name, (lhs, rhs) in boundary_identity_residuals(jets, angle).items()}
