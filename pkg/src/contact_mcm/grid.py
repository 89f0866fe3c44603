"""
Structured reference grids and the finite-difference stencils defined on them.

Three grids are used throughout the package:

 - RadialGrid:      1D grid in r; cell-centered on [0, 1] for lenses (no node at the pole,
                    last node exactly at r = 1) or uniform on [1, R_ref] for exteriors
 - PolarGrid:       cell-centered polar grid on the unit disk, shape (n_r, n_theta)
 - CartesianGrid:   uniform 2D grid used for Eulerian probes of reconstructed graphs

Stencils are centered and second order in the interior. Boundary first derivatives use four
point one-sided stencils (third order), boundary second derivatives four point ones (second
order). At the lens pole the ghost value at r = -r0 is taken from the symmetric
node: f(-r0) = parity * f(r0) radially, f(-r0, theta) = f(r0, theta + pi) on the polar grid.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple, Union

import numpy as np

from src.contact_mcm.errors import GridTooSmall

LENS = "lens"
EXTERIOR = "exterior"


###################################################################################################
# One dimensional stencils (along axis 0)
###################################################################################################

def first_difference(f: np.ndarray, h: float, lo_ghost: Optional[np.ndarray] = None) -> np.ndarray:
    """First derivative along axis 0.

    :param f:           Samples, axis 0 is the differentiated direction
    :param h:           Node spacing
    :param lo_ghost:    Ghost value below node 0; one-sided stencil when omitted
    :return:            Derivative samples, same shape as `f`
    """
    if f.shape[0] < 4:
        raise GridTooSmall(f"need at least 4 nodes to differentiate, got {f.shape[0]}")
    out = np.empty_like(f, dtype=float)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[-1] = backward_slope(f[-1], f[-2], f[-3], f[-4], h)
    if lo_ghost is None:
        out[0] = -backward_slope(f[0], f[1], f[2], f[3], h)
    else:
        out[0] = (f[1] - lo_ghost) / (2 * h)
    return out


def second_difference(f: np.ndarray, h: float, lo_ghost: Optional[np.ndarray] = None) -> np.ndarray:
    """Second derivative along axis 0, four point one-sided stencils at the ends.

    :param f:           Samples, axis 0 is the differentiated direction
    :param h:           Node spacing
    :param lo_ghost:    Ghost value below node 0; one-sided stencil when omitted
    :return:            Second derivative samples
    """
    if f.shape[0] < 4:
        raise GridTooSmall(f"need at least 4 nodes for a second derivative, got {f.shape[0]}")
    h2 = h * h
    out = np.empty_like(f, dtype=float)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h2
    if lo_ghost is None:
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2
    else:
        out[0] = (f[1] - 2 * f[0] + lo_ghost) / h2
    return out


def slope_neighbours(f_1: np.ndarray, f_2: np.ndarray, f_3: np.ndarray) -> np.ndarray:
    """Neighbour part c of the one-sided slope (11 f_end - c) / 6h."""
    return 18 * f_1 - 9 * f_2 + 2 * f_3


def backward_slope(f_end: np.ndarray, f_1: np.ndarray, f_2: np.ndarray, f_3: np.ndarray,
                   h: float) -> np.ndarray:
    """Four point backward first difference at the last node, third order."""
    return (11 * f_end - slope_neighbours(f_1, f_2, f_3)) / (6 * h)


def inner_slope(f_1: np.ndarray, f_2: np.ndarray, f_3: np.ndarray, f_4: np.ndarray, h: float) -> np.ndarray:
    """First derivative at the last node from the four nodes before it, third order.

    Leaves out the end node, whose value comes from a one-sided stencil and so carries an
    error that does not vary smoothly with its neighbours.
    """
    return (26 * f_1 - 57 * f_2 + 42 * f_3 - 11 * f_4) / (6 * h)


###################################################################################################
# Grids
###################################################################################################

@dataclass(frozen=True)
class RadialGrid:
    kind: str
    n_nodes: int
    r_outer: float = 1.0

    def __post_init__(self):
        if self.kind not in (LENS, EXTERIOR):
            raise ValueError(f"unknown radial grid kind '{self.kind}'")
        if self.n_nodes < 4:
            raise GridTooSmall(f"radial grid needs at least 4 nodes, got {self.n_nodes}")
        if self.kind == EXTERIOR and self.r_outer <= 1.0:
            raise ValueError("exterior grid needs r_outer > 1")

    @property
    def dim(self) -> int:
        return 1

    @property
    def shape(self) -> Tuple[int]:
        return (self.n_nodes,)

    @cached_property
    def spacing(self) -> float:
        if self.kind == LENS:
            return 1.0 / (self.n_nodes - 0.5)
        return (self.r_outer - 1.0) / (self.n_nodes - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.kind == LENS:
            return (np.arange(self.n_nodes) + 0.5) * self.spacing
        return 1.0 + np.arange(self.n_nodes) * self.spacing

    @property
    def contact_index(self) -> int:
        """Node sitting on the free boundary r = 1."""
        return self.n_nodes - 1 if self.kind == LENS else 0

    def _ghost(self, f: np.ndarray, parity: int) -> Optional[np.ndarray]:
        if self.kind == LENS:
            return parity * f[0]
        return None

    def d_dr(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        return first_difference(f, self.spacing, self._ghost(f, parity))

    def d2_dr2(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        return second_difference(f, self.spacing, self._ghost(f, parity))

    def gradient(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        return self.d_dr(f, parity)[..., None]

    def hessian(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        return self.d2_dr2(f, parity)[..., None, None]

    def surface_jets(self, f: np.ndarray, parity: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """First and second derivatives of the rotationally symmetric surface `f(|y|)` in the
        orthonormal frame (e_r, e_theta).

        :return: (Df with shape (n, 2), D2f with shape (n, 2, 2))
        """
        f_r = self.d_dr(f, parity)
        f_rr = self.d2_dr2(f, parity)
        grad = np.zeros(self.shape + (2,))
        grad[:, 0] = f_r
        hess = np.zeros(self.shape + (2, 2))
        hess[:, 0, 0] = f_rr
        hess[:, 1, 1] = f_r / self.nodes
        return grad, hess

    def describe(self) -> dict:
        return {"type": "radial", "kind": self.kind, "n_nodes": self.n_nodes, "r_outer": self.r_outer}


@dataclass(frozen=True)
class PolarGrid:
    n_r: int
    n_theta: int

    def __post_init__(self):
        if self.n_r < 4 or self.n_theta < 4:
            raise GridTooSmall(f"polar grid too small: n_r={self.n_r}, n_theta={self.n_theta}")
        if self.n_theta % 2:
            raise ValueError("n_theta must be even for the pole ghost rows")

    @property
    def dim(self) -> int:
        return 2

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_r, self.n_theta)

    @cached_property
    def dr(self) -> float:
        return 1.0 / (self.n_r - 0.5)

    @cached_property
    def dtheta(self) -> float:
        return 2 * np.pi / self.n_theta

    @cached_property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.dr

    @cached_property
    def theta(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.dtheta

    @cached_property
    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.theta, indexing="ij")

    @cached_property
    def points(self) -> np.ndarray:
        rr, tt = self.mesh
        return np.stack((rr * np.cos(tt), rr * np.sin(tt)), axis=-1)

    def pole_ghost(self, f: np.ndarray) -> np.ndarray:
        """Values at (-r0, theta), i.e. the innermost ring rotated by pi."""
        return np.roll(f[0], -self.n_theta // 2, axis=0)

    def d_theta(self, f: np.ndarray) -> np.ndarray:
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * self.dtheta)

    def d2_theta2(self, f: np.ndarray) -> np.ndarray:
        return (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / self.dtheta ** 2

    def polar_derivatives(self, f: np.ndarray) -> dict:
        """All first and second polar derivatives of `f` (shape (n_r, n_theta, ...))."""
        ghost = self.pole_ghost(f)
        f_r = first_difference(f, self.dr, ghost)
        return dict(
            r=f_r,
            theta=self.d_theta(f),
            rr=second_difference(f, self.dr, ghost),
            thetatheta=self.d2_theta2(f),
            rtheta=self.d_theta(f_r),
        )

    def _trailing(self, a: np.ndarray, ndim: int) -> np.ndarray:
        return a.reshape(a.shape + (1,) * (ndim - 2))

    def gradient(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        d = self.polar_derivatives(f)
        return self._cartesian_gradient(d, f.ndim)

    def _cartesian_gradient(self, d: dict, ndim: int) -> np.ndarray:
        rr, tt = self.mesh
        c, s = self._trailing(np.cos(tt), ndim), self._trailing(np.sin(tt), ndim)
        r = self._trailing(rr, ndim)
        f_x = c * d["r"] - s * d["theta"] / r
        f_y = s * d["r"] + c * d["theta"] / r
        return np.stack((f_x, f_y), axis=-1)

    def hessian(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        d = self.polar_derivatives(f)
        return self._cartesian_hessian(d, f.ndim)

    def _cartesian_hessian(self, d: dict, ndim: int) -> np.ndarray:
        rr, tt = self.mesh
        c, s = self._trailing(np.cos(tt), ndim), self._trailing(np.sin(tt), ndim)
        r = self._trailing(rr, ndim)
        tangential = d["r"] / r + d["thetatheta"] / r ** 2
        mixed = d["rtheta"] / r - d["theta"] / r ** 2
        f_xx = c * c * d["rr"] + s * s * tangential - 2 * c * s * mixed
        f_yy = s * s * d["rr"] + c * c * tangential + 2 * c * s * mixed
        f_xy = c * s * (d["rr"] - tangential) + (c * c - s * s) * mixed
        return np.stack((np.stack((f_xx, f_xy), -1), np.stack((f_xy, f_yy), -1)), -2)

    def surface_jets(self, f: np.ndarray, parity: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        d = self.polar_derivatives(f)
        return self._cartesian_gradient(d, f.ndim), self._cartesian_hessian(d, f.ndim)

    def describe(self) -> dict:
        return {"type": "polar", "n_r": self.n_r, "n_theta": self.n_theta}


@dataclass(frozen=True)
class CartesianGrid:
    x0: float
    y0: float
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise GridTooSmall(f"cartesian grid too small: {self.nx}x{self.ny}")

    @property
    def dim(self) -> int:
        return 2

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nx, self.ny)

    @cached_property
    def points(self) -> np.ndarray:
        x = self.x0 + self.spacing * np.arange(self.nx)
        y = self.y0 + self.spacing * np.arange(self.ny)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        return np.stack((xx, yy), axis=-1)

    def _d1(self, f: np.ndarray, axis: int) -> np.ndarray:
        return np.moveaxis(first_difference(np.moveaxis(f, axis, 0), self.spacing), 0, axis)

    def _d2(self, f: np.ndarray, axis: int) -> np.ndarray:
        return np.moveaxis(second_difference(np.moveaxis(f, axis, 0), self.spacing), 0, axis)

    def gradient(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        return np.stack((self._d1(f, 0), self._d1(f, 1)), axis=-1)

    def hessian(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        f_xx = self._d2(f, 0)
        f_yy = self._d2(f, 1)
        f_xy = self._d1(self._d1(f, 0), 1)
        return np.stack((np.stack((f_xx, f_xy), -1), np.stack((f_xy, f_yy), -1)), -2)

    def surface_jets(self, f: np.ndarray, parity: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        return self.gradient(f), self.hessian(f)

    def describe(self) -> dict:
        return {
            "type": "cartesian", "x0": self.x0, "y0": self.y0, "spacing": self.spacing,
            "nx": self.nx, "ny": self.ny,
        }


Grid = Union[RadialGrid, PolarGrid, CartesianGrid]


def grid_from_description(desc: dict) -> Grid:
    kind = desc["type"]
    if kind == "radial":
        return RadialGrid(desc["kind"], int(desc["n_nodes"]), float(desc["r_outer"]))
    if kind == "polar":
        return PolarGrid(int(desc["n_r"]), int(desc["n_theta"]))
    if kind == "cartesian":
        return CartesianGrid(float(desc["x0"]), float(desc["y0"]), float(desc["spacing"]),
                             int(desc["nx"]), int(desc["ny"]))
    raise ValueError(f"unknown grid type '{kind}'")


###################################################################################################
# Sampled fields
###################################################################################################

def _upper_indices(dim: int):
    return np.triu_indices(dim)


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray
    # Parity about the lens pole: +1 for even profiles (u), -1 for odd ones (phi)
    parity: int = 1

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values of shape {self.values.shape} do not match grid {self.grid.shape}")


@dataclass(frozen=True)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[:-1] != self.grid.shape:
            raise ValueError(f"values of shape {self.values.shape} do not match grid {self.grid.shape}")


@dataclass(frozen=True)
class SymTensorField:
    """Symmetric tensor field; only the upper triangle is stored."""
    grid: Grid
    upper: np.ndarray
    dim: int = field(default=2)

    @classmethod
    def from_matrix(cls, grid: Grid, matrix: np.ndarray) -> SymTensorField:
        dim = matrix.shape[-1]
        i, j = _upper_indices(dim)
        return cls(grid, matrix[..., i, j], dim)

    def matrix(self) -> np.ndarray:
        i, j = _upper_indices(self.dim)
        out = np.zeros(self.upper.shape[:-1] + (self.dim, self.dim))
        out[..., i, j] = self.upper
        out[..., j, i] = self.upper
        return out
