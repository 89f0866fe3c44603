"""
Pointwise algebraic checks on graph geometry: the stored-curvature trace identity, the
normalization of N, and the conformal pseudo-frame (omega, v omega^perp) in two dimensions.

All residuals are reported relative to 1 + the size of the terms involved and must vanish to
round-off.
"""
from __future__ import annotations
from typing import List

import numpy as np

from src.contact_mcm.diagnose.fields import State, graph_jets, rotate_quarter
from src.contact_mcm.diagnose.report import ResidualReport, max_abs
from src.contact_mcm.errors import NotApplicable, SolverError
from src.contact_mcm.geometry import ContactAngle, graph_metric, lower_power, quadratic, trace_g
from src.contact_mcm.trace import Snapshot


def _relative(name: str, residual: np.ndarray, *terms: np.ndarray, **detail) -> ResidualReport:
    scale = max(max_abs(t) for t in terms) if terms else 0.0
    return ResidualReport(name, max_abs(residual) / (1.0 + scale), spacing=None, scale=scale,
                          detail=dict(detail))


def trace_identity(snapshot: Snapshot, angle: ContactAngle) -> ResidualReport:
    """g^ij h_ij of the stored fields against the mean curvature stored at capture time."""
    if "H" not in snapshot.derived:
        raise NotApplicable(f"snapshot at step {snapshot.step} carries no mean curvature")
    stored = snapshot.derived["H"]
    try:
        geom = graph_jets(snapshot.state(), angle).geom
    except SolverError as e:
        return ResidualReport("trace_identity", np.inf, passed=False, spacing=None,
                              detail={"step": snapshot.step, "error": str(e)})
    trace = trace_g(geom.h, geom.ginv)
    if trace.shape != stored.shape:
        return ResidualReport("trace_identity", np.inf, passed=False, spacing=None,
                              detail={"step": snapshot.step})
    return _relative("trace_identity", trace - stored, trace, stored, step=snapshot.step, t=snapshot.t)


def normal_identities(state: State, angle: ContactAngle) -> List[ResidualReport]:
    """|N| = 1 and N^(n+1) v = 1 at every node."""
    geom = graph_jets(state, angle).geom
    unit = np.linalg.norm(geom.N, axis=-1) - 1.0
    height = geom.N[..., -1] * geom.v - 1.0
    return [
        _relative("normal_unit", unit, t=float(state.t)),
        _relative("normal_height", height, geom.v, t=float(state.t)),
    ]


def conformal_frame_residuals(dw: np.ndarray, d2w: np.ndarray) -> dict:
    """Residual fields of the pseudo-frame identities and the determinant identity.

    With omega~ = v omega^perp:
        <omega, omega~>_g = 0,  |omega|^2_g = |Dw|^2,  |omega~|^2_g = |Dw|^2,
        h^2(omega, omega) - H h(omega, omega) = -|Dw|^2 det h / det g
    """
    v = np.sqrt(1.0 + np.einsum("...i,...i->...", dw, dw))
    g = graph_metric(dw)
    ginv = np.linalg.inv(g)
    h = d2w / v[..., None, None]
    H = trace_g(h, ginv)
    omega = dw / v[..., None]
    omega_t = v[..., None] * rotate_quarter(omega)
    grad2 = np.einsum("...i,...i->...", dw, dw)

    cross = quadratic(g, omega, omega_t)
    len_omega = quadratic(g, omega) - grad2
    len_omega_t = quadratic(g, omega_t) - grad2
    lhs = quadratic(lower_power(h, ginv, 2), omega) - H * quadratic(h, omega)
    det_term = -grad2 * np.linalg.det(h) / np.linalg.det(g)
    return {
        "cross": (cross, grad2),
        "length_omega": (len_omega, grad2),
        "length_omega_tilde": (len_omega_t, grad2),
        "determinant": (lhs - det_term, lhs),
        "concave_sign": lhs,
    }


def conformal_frame_check(state: State, angle: ContactAngle, concave: bool = False) -> ResidualReport:
    """Worst of the pseudo-frame identities; with `concave` also h^2(omega, omega) <= H h(omega, omega)."""
    geom = graph_jets(state, angle).geom
    res = conformal_frame_residuals(geom.dw, geom.d2w)
    detail = {}
    worst = 0.0
    for name in ("cross", "length_omega", "length_omega_tilde", "determinant"):
        field, scale = res[name]
        value = max_abs(field) / (1.0 + max_abs(scale))
        detail[name] = value
        worst = max(worst, value)
    sign = float(np.max(res["concave_sign"]))
    detail["max_h2_minus_Hh"] = sign
    report = ResidualReport("conformal_frame", worst, spacing=None, detail=detail)
    if concave and sign > 1e-10:
        report.passed = False
    return report
