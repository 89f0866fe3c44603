"""
Initial data: seed profiles, compatible initial diffeomorphisms and triple-junction export.

A seed profile w0(rho) is a rotationally symmetric graph over the disk of radius R0 that
vanishes on its boundary with slope -beta0 / beta. Solver seeds sample u0 = w0 o phi0 on the
reference grid, where phi0 is either R0 times the identity or the compatible diffeomorphism

    phi0(x) = R0 (x + zeta(rho) f(x) n(x)),     f = 1/2 rho^2 g,   rho = 1 - |x|,

with n = -e_r and g the harmonic extension of the required normal 2-jet h. phi0 equals the
identity to first order on the unit circle and has n . d2 phi0(n, n) = h there, which makes
the contact condition u = 0 hold to first order in time.
"""
from __future__ import annotations
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Type, Union

import numpy as np

from src.contact_mcm.errors import DomainError, NotDiffeo
from src.contact_mcm.geometry import ContactAngle, param_metric
from src.contact_mcm.grid import (EXTERIOR, LENS, PolarGrid, RadialGrid, ScalarField, VectorField,
                                  backward_slope, second_difference)
from src.contact_mcm.planar import PlanarConfig, PlanarState, boundary_newton
from src.contact_mcm.radial import (PINNED, OuterBoundary, RadialConfig, RadialState, apply_bcs,
                                    catenoid_profile, contact_slopes, rhs_split_gauge)

logger = logging.getLogger(__name__)

PARABOLOID = "paraboloid"
CAP = "cap"
CATENOID = "catenoid"

MESH_HEADER = "mcm-tj v1"


###################################################################################################
# Reference domain
###################################################################################################

def smoothstep(s: np.ndarray, order: int = 0) -> np.ndarray:
    """Quintic S(s) = 6 s^5 - 15 s^4 + 10 s^3 on [0, 1] and its derivatives."""
    s = np.clip(s, 0.0, 1.0)
    if order == 0:
        return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    if order == 1:
        return 30.0 * s * s * (1.0 - s) ** 2
    if order == 2:
        return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    raise ValueError(f"smoothstep derivative of order {order} not available")


@dataclass(frozen=True)
class DomainDescriptor:
    """Unit reference disk with the boundary distance rho = 1 - r, the inner normal -e_r and a
    cutoff zeta equal to 1 on rho < rho1 and 0 on rho > rho2."""
    rho1: float = 0.05
    rho2: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.rho1 < self.rho2 < 1.0:
            raise DomainError(f"cutoff must satisfy 0 < rho1 < rho2 < 1, got {self.rho1}, {self.rho2}")

    @staticmethod
    def rho(r: np.ndarray) -> np.ndarray:
        return 1.0 - np.asarray(r, dtype=float)

    @staticmethod
    def normal(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return -np.stack((np.cos(theta), np.sin(theta)), axis=-1)

    def cutoff(self, rho: np.ndarray, order: int = 0) -> np.ndarray:
        """zeta(rho) or its `order`-th derivative in rho."""
        width = self.rho2 - self.rho1
        s = (np.asarray(rho, dtype=float) - self.rho1) / width
        if order == 0:
            return 1.0 - smoothstep(s)
        inside = (s > 0) & (s < 1)
        return np.where(inside, -smoothstep(s, order) / width ** order, 0.0)

    def sample(self, grid: PolarGrid) -> Tuple[ScalarField, VectorField, ScalarField]:
        """(rho, n, zeta) on the polar grid."""
        rr, tt = grid.mesh
        rho = self.rho(rr)
        return ScalarField(grid, rho), VectorField(grid, self.normal(tt)), ScalarField(grid, self.cutoff(rho))


###################################################################################################
# Profiles
###################################################################################################

@dataclass(frozen=True)
class SeedProfile(ABC):
    """Rotationally symmetric initial graph w0(rho) over the disk of radius R0."""
    angle: ContactAngle
    R0: float = 1.0
    family = ""

    def __post_init__(self):
        if not self.R0 > 0:
            raise DomainError(f"R0 must be positive, got {self.R0}")

    @abstractmethod
    def value(self, rho):
        ...

    @abstractmethod
    def slope(self, rho):
        ...

    @abstractmethod
    def curvature(self, rho):
        ...

    def mean_curvature(self, rho) -> np.ndarray:
        """H = w'' / v^3 + w' / (rho v), continued by 2 w''(0) on the axis."""
        rho = np.asarray(rho, dtype=float)
        w_r = self.slope(rho)
        w_rr = self.curvature(rho)
        v = np.sqrt(1.0 + w_r * w_r)
        safe = np.where(rho > 0, rho, 1.0)
        return np.where(rho > 0, w_rr / v ** 3 + w_r / (safe * v), 2.0 * w_rr)

    @property
    def boundary_mean_curvature(self) -> float:
        return float(self.mean_curvature(self.R0))


@dataclass(frozen=True)
class ParaboloidProfile(SeedProfile):
    """w0 = beta0 / (2 beta R0) (R0^2 - rho^2)."""
    family = PARABOLOID

    @property
    def a(self) -> float:
        return self.angle.beta0 / (2.0 * self.angle.beta * self.R0)

    def value(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.a * (self.R0 ** 2 - rho * rho)

    def slope(self, rho):
        return -2.0 * self.a * np.asarray(rho, dtype=float)

    def curvature(self, rho):
        return np.full(np.shape(rho), -2.0 * self.a)


@dataclass(frozen=True)
class CapProfile(SeedProfile):
    """Spherical cap of radius R0 / beta0 cut by the plane at height beta R0 / beta0."""
    family = CAP

    @property
    def sphere_radius(self) -> float:
        return self.R0 / self.angle.beta0

    def _root(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(self.sphere_radius ** 2 - rho * rho)

    def value(self, rho):
        return self._root(rho) - self.angle.beta * self.sphere_radius

    def slope(self, rho):
        return -np.asarray(rho, dtype=float) / self._root(rho)

    def curvature(self, rho):
        return -self.sphere_radius ** 2 / self._root(rho) ** 3


PROFILES: Dict[str, Type[SeedProfile]] = {PARABOLOID: ParaboloidProfile, CAP: CapProfile}


def lens_profile(angle: ContactAngle, R0: float = 1.0) -> SeedProfile:
    return ParaboloidProfile(angle, R0)


def cap_profile(angle: ContactAngle, R0: float = 1.0) -> SeedProfile:
    return CapProfile(angle, R0)


def profile_from_family(family: str, angle: ContactAngle, R0: float = 1.0) -> SeedProfile:
    try:
        return PROFILES[family](angle, R0)
    except KeyError:
        raise DomainError(f"unknown seed family '{family}', expected one of {sorted(PROFILES)}")


###################################################################################################
# Compatible diffeomorphisms
###################################################################################################

def required_jet(H0_boundary, angle: ContactAngle):
    """Normal 2-jet n . d2 phi0(n, n) making the seed compatible, -H0 / (beta^2 beta0)."""
    return -np.asarray(H0_boundary, dtype=float) / (angle.beta ** 2 * angle.beta0)


@dataclass(frozen=True)
class HarmonicExtension:
    """Harmonic function on the unit disk with prescribed samples on the unit circle.

    The boundary samples are read as a trigonometric polynomial, so the extension
    sum_m c_m r^|m| e^{i m theta} is exact.
    """
    coefficients: np.ndarray
    n_theta: int

    @classmethod
    def from_boundary(cls, h: np.ndarray) -> HarmonicExtension:
        h = np.asarray(h, dtype=float)
        return cls(np.fft.rfft(h), len(h))

    @property
    def modes(self) -> np.ndarray:
        return np.arange(len(self.coefficients))

    def _synthesize(self, radial: np.ndarray, factor: Union[np.ndarray, float] = 1.0) -> np.ndarray:
        return np.fft.irfft(self.coefficients[None, :] * factor * radial, n=self.n_theta, axis=1)

    def value(self, r: np.ndarray) -> np.ndarray:
        """g on the rings `r`, shape (len(r), n_theta)."""
        r = np.asarray(r, dtype=float)
        return self._synthesize(r[:, None] ** self.modes[None, :])

    def d_r(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        m = self.modes[None, :]
        return self._synthesize(m * r[:, None] ** np.maximum(m - 1, 0))


def extend_boundary_function(h: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Extension g of boundary samples `h` into the disk, evaluated on the rings `r`."""
    return HarmonicExtension.from_boundary(h).value(r)


@dataclass(frozen=True)
class Diffeo:
    """phi0 = psi(r, theta) e_r on a polar grid, with psi = r - zeta 1/2 rho^2 g."""
    grid: PolarGrid
    psi: np.ndarray
    psi_r: np.ndarray

    @property
    def phi1(self) -> np.ndarray:
        return self.psi * np.cos(self.grid.theta)[None, :]

    @property
    def phi2(self) -> np.ndarray:
        return self.psi * np.sin(self.grid.theta)[None, :]

    @property
    def jacobian(self) -> np.ndarray:
        """det D phi0 = psi_r psi / r."""
        return self.psi_r * self.psi / self.grid.r[:, None]

    def stacked(self) -> np.ndarray:
        return np.stack((self.phi1, self.phi2), axis=-1)


def build_diffeo(h: np.ndarray, grid: PolarGrid, domain: Optional[DomainDescriptor] = None,
                 jet_factor: float = 0.5) -> Diffeo:
    """Compatible initial diffeomorphism of the unit disk.

    :param h:           Required normal 2-jet, one sample per boundary node
    :param grid:        Polar reference grid
    :param domain:      Cutoff parameters
    :param jet_factor:  Coefficient of rho^2 g; anything but 1/2 breaks the jet condition
    :raises NotDiffeo:  Jacobian not positive; use a narrower cutoff
    """
    domain = domain or DomainDescriptor()
    h = np.asarray(h, dtype=float)
    if h.shape != (grid.n_theta,):
        raise ValueError(f"h needs one value per boundary node, got shape {h.shape}")
    ext = HarmonicExtension.from_boundary(h)
    r = grid.r[:, None]
    rho = domain.rho(r)
    zeta = domain.cutoff(rho)
    d_zeta = domain.cutoff(rho, 1)
    g = ext.value(grid.r)
    g_r = ext.d_r(grid.r)
    psi = r - jet_factor * zeta * rho ** 2 * g
    # d/dr rho = -1
    psi_r = 1.0 + jet_factor * (d_zeta * rho ** 2 * g + 2.0 * zeta * rho * g - zeta * rho ** 2 * g_r)
    diffeo = Diffeo(grid, psi, psi_r)
    min_jac = float(diffeo.jacobian.min())
    if min_jac <= 0:
        raise NotDiffeo(f"min Jacobian {min_jac:.3e}; shrink the cutoff width rho2 = {domain.rho2}")
    logger.debug(f"diffeo built on {grid.describe()}: min Jacobian {min_jac:.4f}")
    return diffeo


def build_radial_diffeo(h: float, grid: RadialGrid, domain: Optional[DomainDescriptor] = None
                        ) -> Tuple[np.ndarray, np.ndarray]:
    """(psi, psi_r) on a lens grid for a constant jet `h`."""
    domain = domain or DomainDescriptor()
    if grid.kind != LENS:
        raise DomainError("compatible diffeomorphisms are built for lens grids only")
    r = grid.nodes
    rho = domain.rho(r)
    zeta = domain.cutoff(rho)
    psi = r - 0.5 * zeta * rho ** 2 * h
    psi_r = 1.0 + 0.5 * h * (domain.cutoff(rho, 1) * rho ** 2 + 2.0 * zeta * rho)
    if psi_r.min() <= 0:
        raise NotDiffeo(f"min phi_r {psi_r.min():.3e}; shrink the cutoff width rho2 = {domain.rho2}")
    return psi, psi_r


@dataclass
class JetReport:
    boundary_error: float
    differential_error: float
    jet_error: float
    min_jacobian: float
    spacing: float

    def to_dict(self) -> dict:
        return {
            "kind": "jet", "boundary_error": self.boundary_error,
            "differential_error": self.differential_error, "jet_error": self.jet_error,
            "min_jacobian": self.min_jacobian, "spacing": self.spacing,
        }


def verify_jet(phi: np.ndarray, h: np.ndarray, grid: PolarGrid) -> JetReport:
    """Finite-difference check of the three boundary jet conditions of a diffeomorphism.

    :param phi: Map samples, shape (n_r, n_theta, 2)
    :param h:   Required normal 2-jet per boundary node
    :return:    Max errors of (phi - Id), (D phi - I), (n . d2 phi(n, n) - h) on the unit circle
                and the min finite-difference Jacobian
    """
    x = grid.points
    boundary = float(np.abs(phi[-1] - x[-1]).max())
    # D[..., a, i] = d_i phi^a
    D = grid.gradient(phi)
    differential = float(np.abs(D[-1] - np.eye(2)).max())
    jacobian = D[..., 0, 0] * D[..., 1, 1] - D[..., 0, 1] * D[..., 1, 0]
    # second derivative along the ray, n = -e_r
    phi_rr = second_difference(phi, grid.dr)[-1]
    n = DomainDescriptor.normal(grid.theta)
    jet = np.einsum("ka,ka->k", phi_rr, n)
    return JetReport(boundary, differential, float(np.abs(jet - np.asarray(h)).max()),
                     float(jacobian.min()), grid.dr)


###################################################################################################
# Solver seeds
###################################################################################################

def radial_seed(profile: SeedProfile, n_nodes: int, compatible: bool = True,
                domain: Optional[DomainDescriptor] = None) -> RadialState:
    """Lens seed u0 = w0 o phi0 on a lens grid, projected onto the discrete boundary conditions."""
    grid = RadialGrid(LENS, n_nodes)
    if compatible:
        h = float(required_jet(profile.R0 * profile.boundary_mean_curvature, profile.angle))
        psi, _ = build_radial_diffeo(h, grid, domain)
    else:
        psi = grid.nodes.copy()
    phi = profile.R0 * psi
    state = RadialState(0.0, profile.value(phi), phi, grid)
    return apply_bcs(state, RadialConfig(LENS, profile.angle, n_nodes))


def catenoid_seed(angle: ContactAngle, n_nodes: int, r_outer: float = 3.0) -> Tuple[RadialState, OuterBoundary]:
    """Exterior catenoid state and the outer pin that keeps it stationary."""
    if abs(angle.slope - math.sqrt(3.0)) > 1e-12:
        raise DomainError("the catenoid seed is stationary only for beta = 1/2")
    grid = RadialGrid(EXTERIOR, n_nodes, r_outer)
    r = grid.nodes
    outer = OuterBoundary(PINNED, float(catenoid_profile(r_outer)), float(r_outer))
    state = RadialState(0.0, catenoid_profile(r), r.copy(), grid)
    return apply_bcs(state, RadialConfig(EXTERIOR, angle, n_nodes, outer, r_outer=r_outer)), outer


def planar_seed(profile: SeedProfile, config: PlanarConfig, compatible: bool = True,
                domain: Optional[DomainDescriptor] = None) -> PlanarState:
    """Planar seed u0 = w0 o phi0, projected onto the boundary ring conditions."""
    grid = config.grid
    if compatible:
        H_ring = np.full(grid.n_theta, profile.boundary_mean_curvature)
        diffeo = build_diffeo(required_jet(profile.R0 * H_ring, profile.angle), grid, domain)
        psi = diffeo.psi
    else:
        psi = np.repeat(grid.r[:, None], grid.n_theta, axis=1)
    phi_rho = profile.R0 * psi
    theta = grid.theta[None, :]
    state = PlanarState(0.0, phi_rho * np.cos(theta), phi_rho * np.sin(theta), profile.value(phi_rho), grid)
    projected, iterations = boundary_newton(state, config)
    logger.debug(f"planar seed projected in {iterations} Newton iterations")
    return projected


def compatibility_residual(state: Union[RadialState, PlanarState]) -> np.ndarray:
    """Contact-condition rate g^ij u_ij on the free boundary; zero for compatible seeds."""
    if isinstance(state, PlanarState):
        DF, D2F = state.grid.surface_jets(state.F)
        _, ginv = param_metric(DF[-1])
        return np.einsum("kij,kij->k", ginv, D2F[-1, :, 2])
    du, _ = rhs_split_gauge(state)
    return np.atleast_1d(du[state.grid.contact_index])


###################################################################################################
# Triple junction
###################################################################################################

@dataclass
class TripleJunction:
    """Graph of w, its mirror -w and the planar complement, sharing the junction curve.

    Vertex indices are 0-based in memory; `to_text` writes them 1-based.
    """
    vertices: np.ndarray
    faces: Dict[str, np.ndarray]
    junction: np.ndarray
    conormals: Dict[str, np.ndarray] = field(default_factory=dict)

    def junction_angles(self) -> Dict[str, np.ndarray]:
        """Pairwise angles in degrees between the sheet conormals at every junction node."""
        pairs = (("upper", "lower"), ("upper", "plane"), ("lower", "plane"))
        out = {}
        for a, b in pairs:
            cos = np.einsum("ki,ki->k", self.conormals[a], self.conormals[b])
            out[f"{a}-{b}"] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    def to_text(self) -> str:
        lines: List[str] = [MESH_HEADER]
        lines.extend(f"v {x!r} {y!r} {z!r}" for x, y, z in self.vertices.tolist())
        for name in ("upper", "lower", "plane"):
            lines.extend(f"f {i + 1} {j + 1} {k + 1}" for i, j, k in self.faces[name].tolist())
        return "\n".join(lines) + "\n"


def _ring_faces(inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Two triangles per quad between two closed rings of vertex indices."""
    nxt_inner = np.roll(inner, -1)
    nxt_outer = np.roll(outer, -1)
    first = np.stack((inner, outer, nxt_outer), axis=-1)
    second = np.stack((inner, nxt_outer, nxt_inner), axis=-1)
    return np.concatenate((first, second))


def _planar_sheet(state: PlanarState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(horizontal positions, heights, conormal of the upper sheet), rings ordered from the
    pole to the junction."""
    points = np.stack((state.phi1, state.phi2), axis=-1)
    F = state.F
    F_r = backward_slope(F[-1], F[-2], F[-3], F[-4], state.grid.dr)
    return points, state.u, -F_r / np.linalg.norm(F_r, axis=-1, keepdims=True)


def revolve(state: RadialState, n_theta: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotationally symmetric lens state as rings, with the upper-sheet conormal."""
    if state.grid.kind != LENS:
        raise DomainError("triple junctions are built from lens states")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    e_r = np.stack((np.cos(theta), np.sin(theta)), axis=-1)
    points = state.phi[:, None, None] * e_r[None]
    heights = np.repeat(state.u[:, None], n_theta, axis=1)
    u_r, phi_r = contact_slopes(state)
    s = math.hypot(u_r, phi_r)
    conormal = np.concatenate((-phi_r / s * e_r, np.full((n_theta, 1), -u_r / s)), axis=-1)
    return points, heights, conormal


def reflect_triple_junction(state: Union[RadialState, PlanarState], n_theta: int = 64,
                            plane_rings: Tuple[float, ...] = (1.5, 2.0)) -> TripleJunction:
    """Reflect a lens across the plane and add the planar complement of D(t).

    :param state:       Lens state with w > 0 inside
    :param n_theta:     Angular resolution when revolving a radial state
    :param plane_rings: Radii of the complement rings, relative to the junction ring
    """
    if isinstance(state, RadialState):
        points, heights, conormal = revolve(state, n_theta)
    else:
        points, heights, conormal = _planar_sheet(state)
    n_rings, n_ang = heights.shape
    if np.any(heights[:-1] <= 0):
        raise DomainError("reflection needs w > 0 inside the lens")

    # upper: rings 0..n-1 plus an axis vertex; lower: rings 0..n-2 mirrored plus its own axis
    upper = np.concatenate((points, heights[..., None]), axis=-1).reshape(-1, 3)
    lower = upper[: (n_rings - 1) * n_ang].copy()
    lower[:, 2] *= -1
    junction_xy = points[-1]
    # outward unit normal of D(t) in the plane
    planar_conormal = conormal[:, :2] / np.linalg.norm(conormal[:, :2], axis=-1, keepdims=True)
    planar_conormal = -planar_conormal
    centroid = junction_xy.mean(axis=0)
    plane = [np.concatenate((centroid + s * (junction_xy - centroid), np.zeros((n_ang, 1))), axis=-1)
             for s in plane_rings]
    axis_top = np.array([[*points[0].mean(axis=0), heights[0].mean()]])
    axis_bottom = axis_top * np.array([1.0, 1.0, -1.0])

    vertices = np.concatenate([upper, lower, *plane, axis_top, axis_bottom])
    up_index = np.arange(n_rings * n_ang).reshape(n_rings, n_ang)
    junction = up_index[-1]
    low_start = n_rings * n_ang
    low_index = np.concatenate((low_start + np.arange((n_rings - 1) * n_ang).reshape(n_rings - 1, n_ang),
                                junction[None]))
    plane_start = low_start + (n_rings - 1) * n_ang
    plane_index = [junction] + [plane_start + k * n_ang + np.arange(n_ang) for k in range(len(plane_rings))]
    top = len(vertices) - 2
    bottom = len(vertices) - 1

    def sheet(index: np.ndarray, pole: int, flip: bool) -> np.ndarray:
        faces = [_ring_faces(index[k], index[k + 1]) for k in range(len(index) - 1)]
        fan = np.stack((np.full(n_ang, pole), index[0], np.roll(index[0], -1)), axis=-1)
        out = np.concatenate([fan] + faces)
        return out[:, ::-1] if flip else out

    faces = {
        "upper": sheet(up_index, top, False),
        "lower": sheet(low_index, bottom, True),
        "plane": np.concatenate([_ring_faces(plane_index[k], plane_index[k + 1])
                                 for k in range(len(plane_index) - 1)]),
    }
    lower_conormal = conormal * np.array([1.0, 1.0, -1.0])
    conormals = {
        "upper": conormal,
        "lower": lower_conormal,
        "plane": np.concatenate((planar_conormal, np.zeros((n_ang, 1))), axis=-1),
    }
    return TripleJunction(vertices, faces, junction, conormals)
