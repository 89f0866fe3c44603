"""
Differential geometry of sampled graphs and parametrized surfaces.

Graph quantities follow the usual conventions for w over a planar domain:

    v = sqrt(1 + |Dw|^2),  g^ij = delta_ij - w_i w_j / v^2,  h_ij = w_ij / v,
    H = g^ij h_ij,  N = [-Dw, 1] / v,  omega = Dw / v

Everything here works on plain arrays with the tensor indices trailing, so the same code
serves the radial grid (lifted to the frame (e_r, e_theta)), the polar grid and the
Cartesian probe grids used by the diagnostics.
"""
from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.contact_mcm.errors import DegenerateImmersion, DomainError
from src.contact_mcm.grid import Grid, ScalarField, SymTensorField, VectorField

DEGENERATE_DET = 1e-14


@dataclass(frozen=True)
class ContactAngle:
    beta: float
    beta0: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must satisfy 0 < beta < 1, got {self.beta}")
        expected = math.sqrt(1.0 - self.beta ** 2)
        if self.beta0 is None:
            object.__setattr__(self, "beta0", expected)
        elif abs(self.beta0 - expected) > 1e-15:
            raise DomainError(f"beta0 must equal sqrt(1 - beta^2) = {expected!r}, got {self.beta0!r}")

    @property
    def slope(self) -> float:
        """|d_n w| on the free boundary, beta0 / beta."""
        return self.beta0 / self.beta


@dataclass(frozen=True)
class GeometryFields:
    v: np.ndarray
    ginv: np.ndarray
    h: np.ndarray
    H: np.ndarray
    N: np.ndarray
    omega: np.ndarray
    dw: np.ndarray
    d2w: np.ndarray
    grid: Optional[Grid] = None
    angle: Optional[ContactAngle] = None

    @property
    def S(self) -> np.ndarray:
        return weingarten(self)

    @property
    def h_norm2(self) -> np.ndarray:
        return norm2_g(self.h, self.ginv)


###################################################################################################
# Tensor algebra
###################################################################################################

def inverse_graph_metric(dw: np.ndarray) -> np.ndarray:
    """g^ij = delta_ij - w_i w_j / (1 + |Dw|^2) for gradients of shape (..., n)."""
    n = dw.shape[-1]
    v2 = 1.0 + np.einsum("...i,...i->...", dw, dw)
    return np.eye(n) - np.einsum("...i,...j->...ij", dw, dw) / v2[..., None, None]


def graph_metric(dw: np.ndarray) -> np.ndarray:
    n = dw.shape[-1]
    return np.eye(n) + np.einsum("...i,...j->...ij", dw, dw)


def lower_power(h: np.ndarray, ginv: np.ndarray, power: int) -> np.ndarray:
    """(h^p)_ij with indices raised by g^-1 between factors: h, h g^-1 h, h g^-1 h g^-1 h."""
    out = h
    for _ in range(power - 1):
        out = np.einsum("...ik,...kl,...lj->...ij", out, ginv, h)
    return out


def norm2_g(h: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """|h|^2_g = g^ik g^jl h_ij h_kl."""
    return np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, h, h)


def trace_g(h: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...ij->...", ginv, h)


def quadratic(m: np.ndarray, a: np.ndarray, b: Optional[np.ndarray] = None) -> np.ndarray:
    """m(a, b) = m_ij a^i b^j."""
    if b is None:
        b = a
    return np.einsum("...ij,...i,...j->...", m, a, b)


def sym2_eigvals(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form eigenvalues (smaller, larger) of symmetric 2x2 matrices."""
    a, b, c = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
    mean = 0.5 * (a + c)
    radius = np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return mean - radius, mean + radius


###################################################################################################
# Operations on sampled fields
###################################################################################################

def fd_gradient(field: ScalarField) -> VectorField:
    return VectorField(field.grid, field.grid.gradient(field.values, field.parity))


def fd_hessian(field: ScalarField) -> SymTensorField:
    return SymTensorField.from_matrix(field.grid, field.grid.hessian(field.values, field.parity))


def metric_inverse(Dw: VectorField) -> SymTensorField:
    return SymTensorField.from_matrix(Dw.grid, inverse_graph_metric(Dw.values))


def geometry_from_jets(dw: np.ndarray, d2w: np.ndarray, grid: Optional[Grid] = None,
                       angle: Optional[ContactAngle] = None) -> GeometryFields:
    """Graph geometry from first and second derivatives of w.

    :param dw:      Gradient samples, shape (..., n)
    :param d2w:     Hessian samples, shape (..., n, n)
    :return:        GeometryFields at the same nodes
    """
    v = np.sqrt(1.0 + np.einsum("...i,...i->...", dw, dw))
    ginv = inverse_graph_metric(dw)
    h = d2w / v[..., None, None]
    H = trace_g(h, ginv)
    N = np.concatenate((-dw, np.ones(dw.shape[:-1] + (1,))), axis=-1) / v[..., None]
    omega = dw / v[..., None]
    return GeometryFields(v=v, ginv=ginv, h=h, H=H, N=N, omega=omega, dw=dw, d2w=d2w, grid=grid,
                          angle=angle)


def graph_geometry(w: ScalarField, angle: Optional[ContactAngle] = None) -> GeometryFields:
    """Geometry of the graph of `w`; radial fields are treated as surfaces of revolution."""
    dw, d2w = w.grid.surface_jets(w.values, w.parity)
    return geometry_from_jets(dw, d2w, w.grid, angle)


def param_metric(DF: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Induced metric of a parametrized surface.

    :param DF:  Jacobians with shape (..., n + 1, n), column i holding F_i
    :return:    (g, g^-1), each of shape (..., n, n)
    :raises DegenerateImmersion: det g at or below 1e-14 somewhere
    """
    g = np.einsum("...ai,...aj->...ij", DF, DF)
    det = np.linalg.det(g)
    if np.any(det <= DEGENERATE_DET):
        raise DegenerateImmersion(f"induced metric degenerate, min det g = {det.min():.3e}")
    return g, np.linalg.inv(g)


def vector_product(DF: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normal of a surface parametrized over a planar domain (n = 2).

    Ntilde = F_1 x F_2 = [J(Dphi, Du), J_phi], so Ntilde is orthogonal to both columns and its
    last component is det(Dphi).

    :param DF:  Jacobians with shape (..., 3, 2)
    :return:    (J with shape (..., 2), J_phi, unit normal N)
    """
    if DF.shape[-2:] != (3, 2):
        raise ValueError("vector_product is implemented for surfaces in R^3 only")
    nt = np.cross(DF[..., :, 0], DF[..., :, 1])
    length = np.linalg.norm(nt, axis=-1)
    if np.any(length * length <= DEGENERATE_DET):
        raise DegenerateImmersion(f"parametrization not immersive, min |Ntilde| = {length.min():.3e}")
    return nt[..., :2], nt[..., 2], nt / length[..., None]


def angle_operator(DF: np.ndarray, angle: ContactAngle) -> np.ndarray:
    """B = beta^2 |J|^2 - beta0^2 J_phi^2, zero exactly when N^3 = beta (J_phi > 0)."""
    J, J_phi, _ = vector_product(DF)
    return angle.beta ** 2 * np.einsum("...i,...i->...", J, J) - angle.beta0 ** 2 * J_phi ** 2


def orthogonality_operator(Dphi: np.ndarray, normal: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """<D_tau phi, D_n phi> at boundary nodes."""
    d_tau = np.einsum("...ai,...i->...a", Dphi, tangent)
    d_n = np.einsum("...ai,...i->...a", Dphi, normal)
    return np.einsum("...a,...a->...", d_tau, d_n)


def weingarten(geom: GeometryFields) -> np.ndarray:
    """S^i_j = g^ik h_kj."""
    return np.einsum("...ik,...kj->...ij", geom.ginv, geom.h)
