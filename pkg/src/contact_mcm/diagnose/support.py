"""
Support function of the convex body bounded by a concave lens.

For the graph G = [y, w] with upward normal N = [-Dw, 1] / v and an origin O,

    p = <G - O, N> = (w - O_z - (y - O_xy) . Dw) / v.

On the free boundary p = -beta0 ((y - O) . n) and d_n p = (beta^2 / beta0) p h_nn, with n the
inner normal of D(t).
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.contact_mcm.diagnose.fields import GraphJets, State, graph_jets, inner_normal
from src.contact_mcm.diagnose.report import ResidualReport
from src.contact_mcm.errors import OriginOutside
from src.contact_mcm.geometry import ContactAngle, quadratic


@dataclass(frozen=True)
class SupportFunctionField:
    p: np.ndarray
    p_min: float
    boundary_value_residual: float
    boundary_normal_residual: float

    def reports(self, spacing: Optional[float] = None) -> list:
        return [
            ResidualReport("support_boundary_value", self.boundary_value_residual, spacing=spacing),
            ResidualReport("support_normal_derivative", self.boundary_normal_residual, spacing=spacing),
        ]


def _origin(jets: GraphJets, origin: Optional[Sequence[float]]) -> np.ndarray:
    if origin is None:
        origin = (0.0, 0.0, 0.0)
    o = np.zeros(3)
    o[:len(origin)] = origin
    if jets.is_radial and np.any(o[:2] != 0):
        raise OriginOutside("radial states only admit origins on the symmetry axis")
    return o


def support_values(jets: GraphJets, origin: Optional[Sequence[float]] = None) -> np.ndarray:
    o = _origin(jets, origin)
    y = jets.points - o[:2]
    return (jets.w - o[2] - np.einsum("...i,...i->...", y, jets.geom.dw)) / jets.geom.v


def support_radius(jets: GraphJets, origin: Optional[Sequence[float]] = None) -> float:
    """max |G - O| over the graph nodes; bounds p pointwise and, the bodies being nested, for
    all later times."""
    o = _origin(jets, origin)
    rel = np.concatenate((jets.points - o[:2], (jets.w - o[2])[..., None]), axis=-1)
    return float(np.linalg.norm(rel, axis=-1).max())


def support_function(snapshot: State, angle: ContactAngle,
                     origin: Optional[Sequence[float]] = None) -> SupportFunctionField:
    """Support function of a lens state about `origin` (default: the base point below the axis).

    :raises OriginOutside: p <= 0 somewhere
    """
    jets = graph_jets(snapshot, angle)
    p = support_values(jets, origin)
    if np.any(p <= 0):
        raise OriginOutside(f"support function not positive (min {p.min():.3e}); origin not admissible")
    o = _origin(jets, origin)
    n = inner_normal(jets)
    y = jets.boundary(jets.points) - o[:2]
    p_b = jets.boundary(p)
    value_res = np.abs(p_b + angle.beta0 * np.einsum("ki,ki->k", y, n))
    h_nn = quadratic(jets.boundary(jets.geom.h), n)
    normal_res = np.abs(jets.normal_derivative(p) - angle.beta ** 2 / angle.beta0 * p_b * h_nn)
    return SupportFunctionField(p, float(p.min()), float(value_res.max()), float(normal_res.max()))
