"""
Motion of the free boundary: the normal velocity law dR/dt = -/+ H / beta0 and the flux
identity  int_D(t) H dy = -beta0 |dD(t)|  for lenses.
"""
from __future__ import annotations
import logging
from typing import Optional

import numpy as np

from src.contact_mcm.diagnose.bounds import is_lens
from src.contact_mcm.diagnose.fields import State, graph_jets
from src.contact_mcm.diagnose.monitor import domain_integral
from src.contact_mcm.diagnose.reconstruct import physical_spacing
from src.contact_mcm.diagnose.report import ResidualReport
from src.contact_mcm.errors import NotApplicable
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import LENS
from src.contact_mcm.planar import PlanarState
from src.contact_mcm.trace import RunTrace

logger = logging.getLogger(__name__)


def boundary_velocity_residual(trace: RunTrace, angle: ContactAngle, t_probe: Optional[float] = None) -> float:
    """|dR/dt - s H|_G / beta0| at the record nearest `t_probe` (default mid-run).

    s = +1 for lenses (H < 0 shrinks the disk) and -1 for the exterior of a disk. dR/dt is the
    centered difference over the neighbouring records.
    """
    records = trace.all_records()
    if len(records) < 3:
        raise NotApplicable("boundary velocity needs at least three records")
    times = np.array([r.t for r in records])
    if t_probe is None:
        t_probe = 0.5 * (times[0] + times[-1])
    k = int(np.clip(np.argmin(np.abs(times - t_probe)), 1, len(records) - 2))
    before, now, after = records[k - 1], records[k], records[k + 1]
    rate = (after.radius - before.radius) / (after.t - before.t)
    sign = 1.0 if is_lens(trace) else -1.0
    return abs(rate - sign * now.H_boundary / angle.beta0)


def boundary_length(state: State) -> float:
    if isinstance(state, PlanarState):
        ring = np.stack((state.phi1[-1], state.phi2[-1]), axis=-1)
        return float(np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=-1).sum())
    return 2 * np.pi * state.radius


def flux_identity(state: State, angle: ContactAngle) -> ResidualReport:
    """int_D(t) H dy against -beta0 |dD(t)|, relative to the boundary term."""
    if not isinstance(state, PlanarState) and state.grid.kind != LENS:
        raise NotApplicable("flux identity needs a lens; the exterior domain has an outer boundary")
    H = graph_jets(state, angle).geom.H
    lhs = domain_integral(state, H)
    rhs = -angle.beta0 * boundary_length(state)
    residual = abs(lhs - rhs) / abs(rhs)
    logger.debug(f"flux identity at t={state.t}: {lhs!r} vs {rhs!r}")
    return ResidualReport("flux_identity", residual, spacing=physical_spacing(state) / state.radius,
                          detail={"integral_H": lhs, "boundary_term": rhs, "t": float(state.t)})
