"""
Run configuration files and presets.

A run is described by a flat INI file:

    [problem]
    solver = radial
    kind = lens
    beta = 0.5

    [time]
    t_end = 0.5
    snapshot_times = 0.05, 0.1

Sections are parsed with configparser and validated by marshmallow schemas generated from the
dataclasses below; unknown sections or keys are errors.
"""
from __future__ import annotations
import configparser
import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import marshmallow
import marshmallow_dataclass
from marshmallow import validate

from src.contact_mcm.errors import ConfigError, DomainError
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import EXTERIOR, LENS
from src.contact_mcm.planar import PlanarConfig, PlanarState
from src.contact_mcm.radial import (NONE, PINNED, VERTICAL_WALL, OuterBoundary, RadialConfig, RadialState,
                                    catenoid_profile)
from src.contact_mcm.seed import (CATENOID, PROFILES, DomainDescriptor, catenoid_seed, planar_seed,
                                  profile_from_family, radial_seed)
from src.contact_mcm.trace import PLANAR, RADIAL

logger = logging.getLogger(__name__)

LIST_KEYS = {"snapshot_times"}


class StrictSchema(marshmallow.Schema):
    class Meta:
        unknown = marshmallow.RAISE


@dataclass
class ProblemSection:
    solver: str = field(default=RADIAL, metadata={"validate": validate.OneOf([RADIAL, PLANAR])})
    kind: str = field(default=LENS, metadata={"validate": validate.OneOf([LENS, EXTERIOR])})
    beta: float = field(default=0.5, metadata={"validate": validate.Range(
        0.0, 1.0, min_inclusive=False, max_inclusive=False, error="beta must satisfy 0 < beta < 1")})


@dataclass
class GridSection:
    n_nodes: int = field(default=200, metadata={"validate": validate.Range(
        min=16, error="n_nodes must satisfy n_nodes >= 16")})
    r_outer: float = field(default=3.0, metadata={"validate": validate.Range(
        1.0, min_inclusive=False, error="r_outer must satisfy r_outer > 1")})
    n_r: int = field(default=48, metadata={"validate": validate.Range(min=16, error="n_r must satisfy n_r >= 16")})
    n_theta: int = field(default=96, metadata={"validate": validate.Range(
        min=32, error="n_theta must satisfy n_theta >= 32")})


@dataclass
class BoundarySection:
    outer_bc: str = field(default=NONE, metadata={"validate": validate.OneOf([NONE, PINNED, VERTICAL_WALL])})
    # Pin values; default to the catenoid through the contact circle
    u_out: Optional[float] = None
    phi_out: Optional[float] = None


@dataclass
class TimeSection:
    t_end: float = field(default=1.0, metadata={"validate": validate.Range(
        min=0.0, error="t_end must be non-negative")})
    cfl_sigma: float = field(default=0.4, metadata={"validate": validate.Range(
        0.0, 0.5, min_inclusive=False, error="cfl_sigma must satisfy 0 < cfl_sigma <= 0.5")})
    extinction_radius: float = field(default=1e-3, metadata={"validate": validate.Range(
        0.0, 1.0, min_inclusive=False, max_inclusive=False)})
    max_steps: int = field(default=50_000_000, metadata={"validate": validate.Range(min=1)})
    snapshot_every: int = field(default=0, metadata={"validate": validate.Range(min=0)})
    record_every: int = field(default=1, metadata={"validate": validate.Range(min=1)})
    snapshot_times: List[float] = field(default_factory=list)


@dataclass
class SeedSection:
    family: str = "paraboloid"
    R0: float = field(default=1.0, metadata={"validate": validate.Range(
        0.0, min_inclusive=False, error="R0 must be positive")})
    compatible: bool = True
    rho1: float = 0.05
    rho2: float = 0.2


@dataclass
class NewtonSection:
    tol: float = 1e-12
    max_iters: int = 20
    min_jacobian: float = 0.05


@dataclass
class DiagnosticsSection:
    origin_x: float = 0.0
    origin_y: float = 0.0


@dataclass
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    grid: GridSection = field(default_factory=GridSection)
    boundary: BoundarySection = field(default_factory=BoundarySection)
    time: TimeSection = field(default_factory=TimeSection)
    seed: SeedSection = field(default_factory=SeedSection)
    newton: NewtonSection = field(default_factory=NewtonSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)

    @property
    def angle(self) -> ContactAngle:
        return ContactAngle(self.problem.beta)

    @property
    def origin(self):
        return (self.diagnostics.origin_x, self.diagnostics.origin_y)

    @property
    def domain(self) -> DomainDescriptor:
        return DomainDescriptor(self.seed.rho1, self.seed.rho2)

    def _time_options(self) -> Dict[str, Any]:
        t = self.time
        return dict(cfl_sigma=t.cfl_sigma, t_end=t.t_end, snapshot_every=t.snapshot_every,
                    extinction_radius=t.extinction_radius, max_steps=t.max_steps,
                    record_every=t.record_every, snapshot_times=tuple(t.snapshot_times), origin=self.origin)

    def outer_boundary(self) -> OuterBoundary:
        b = self.boundary
        if b.outer_bc == NONE:
            return OuterBoundary()
        r_outer = self.grid.r_outer
        u_out = float(catenoid_profile(r_outer)) if b.u_out is None else b.u_out
        phi_out = r_outer if b.phi_out is None else b.phi_out
        return OuterBoundary(b.outer_bc, u_out, phi_out)

    def solver_config(self) -> Union[RadialConfig, PlanarConfig]:
        """The solver configuration; invariants violated here surface as ConfigError."""
        try:
            if self.problem.solver == PLANAR:
                if self.problem.kind != LENS:
                    raise DomainError("the planar solver only supports kind = lens")
                n = self.newton
                return PlanarConfig(self.angle, self.grid.n_r, self.grid.n_theta, newton_tol=n.tol,
                                    newton_max_iters=n.max_iters, min_jacobian=n.min_jacobian,
                                    **self._time_options())
            return RadialConfig(self.problem.kind, self.angle, self.grid.n_nodes, self.outer_boundary(),
                                r_outer=self.grid.r_outer, **self._time_options())
        except DomainError as e:
            raise ConfigError(str(e)) from e

    def seed_state(self, config: Union[RadialConfig, PlanarConfig]) -> Union[RadialState, PlanarState]:
        family = self.seed.family
        if family == CATENOID:
            if self.problem.solver != RADIAL or self.problem.kind != EXTERIOR:
                raise ConfigError("the catenoid seed needs solver = radial and kind = exterior")
            state, _ = catenoid_seed(self.angle, self.grid.n_nodes, self.grid.r_outer)
            return state
        if family not in PROFILES:
            raise ConfigError(f"seed family must be one of {sorted(PROFILES) + [CATENOID]}, got '{family}'")
        if self.problem.kind != LENS:
            raise ConfigError(f"seed family '{family}' needs kind = lens")
        profile = profile_from_family(family, self.angle, self.seed.R0)
        if isinstance(config, PlanarConfig):
            return planar_seed(profile, config, self.seed.compatible, self.domain)
        return radial_seed(profile, config.n_nodes, self.seed.compatible, self.domain)

    def to_ini(self) -> str:
        lines = []
        for section in dataclasses.fields(self):
            lines.append(f"[{section.name}]")
            for key, value in dataclasses.asdict(getattr(self, section.name)).items():
                if value is None:
                    continue
                if isinstance(value, list):
                    value = ", ".join(repr(x) for x in value)
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


RunConfigSchema = marshmallow_dataclass.class_schema(RunConfig, base_schema=StrictSchema)


def _flatten_errors(messages: Dict[str, Any], prefix: str = "") -> List[str]:
    out = []
    for key, value in messages.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten_errors(value, f"{path}."))
        else:
            out.extend(f"{path}: {m}" for m in (value if isinstance(value, list) else [value]))
    return out


def parse_run_config(text: str) -> RunConfig:
    """Parse and validate the text of a run configuration file.

    :raises ConfigError: Malformed INI, unknown keys or violated invariants
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    raw: Dict[str, Dict[str, Any]] = {}
    for name in parser.sections():
        raw[name] = {
            k: [x.strip() for x in v.split(",") if x.strip()] if k in LIST_KEYS else v
            for k, v in parser[name].items()
        }
    try:
        config: RunConfig = RunConfigSchema().load(raw)
    except marshmallow.ValidationError as e:
        raise ConfigError("; ".join(_flatten_errors(e.messages))) from e
    config.solver_config()
    return config


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}") from e
    logger.debug(f"loaded config {path}")
    return parse_run_config(text)


###################################################################################################
# Presets
###################################################################################################

PRESETS: Dict[str, str] = {
    "catenoid": """
[problem]
solver = radial
kind = exterior
beta = 0.5

[grid]
n_nodes = 200
r_outer = 3.0

[boundary]
outer_bc = pinned

[time]
t_end = 1.0
cfl_sigma = 0.5
record_every = 100
snapshot_times = 0.5

[seed]
family = catenoid
""",
    "lens-extinct": """
[problem]
solver = radial
kind = lens
beta = 0.5

[grid]
n_nodes = 64

[time]
t_end = 10.0
record_every = 10
snapshot_times = 0.02, 0.05

[seed]
family = paraboloid
R0 = 1.0
""",
    "lens-prop125": """
[problem]
solver = radial
kind = lens
beta = 0.6

[grid]
n_nodes = 64

[time]
t_end = 10.0
record_every = 10
snapshot_times = 0.02

[seed]
family = cap
R0 = 1.0
""",
    "planar-symmetric": """
[problem]
solver = planar
kind = lens
beta = 0.5

[grid]
n_r = 24
n_theta = 48

[time]
t_end = 0.02
snapshot_times = 0.01

[seed]
family = paraboloid
R0 = 1.0
""",
}


def preset(name: str) -> RunConfig:
    try:
        text = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset '{name}', choose one of {sorted(PRESETS)}")
    return parse_run_config(text)


###################################################################################################
# Config echo stored in trace.json
###################################################################################################

def solver_config_from_echo(solver: str, echo: Dict[str, Any]) -> Union[RadialConfig, PlanarConfig]:
    """Rebuild the solver configuration recorded in a trace."""
    options = dict(echo)
    angle = options.pop("angle")
    options["angle"] = ContactAngle(angle["beta"], angle.get("beta0"))
    options["snapshot_times"] = tuple(options.get("snapshot_times", ()))
    options["origin"] = tuple(options.get("origin", (0.0, 0.0)))
    try:
        if solver == PLANAR:
            return PlanarConfig(**options)
        options["outer_bc"] = OuterBoundary(**options.get("outer_bc", {}))
        return RadialConfig(**options)
    except (TypeError, DomainError) as e:
        raise ConfigError(f"trace carries an invalid config echo: {e}") from e


def refined(config: RunConfig, level: int) -> RunConfig:
    """Copy of `config` with every grid spacing divided by 2**level.

    Exterior grids keep their nodes nested; lens and polar grids double their node counts, which
    halves the spacing up to the half-cell offset of the pole. Periodic snapshots are dropped so
    that every level captures the same probe times.
    """
    factor = 2 ** level
    grid = config.grid
    if config.problem.kind == EXTERIOR:
        n_nodes = (grid.n_nodes - 1) * factor + 1
    else:
        n_nodes = grid.n_nodes * factor
    return dataclasses.replace(
        config,
        grid=dataclasses.replace(grid, n_nodes=n_nodes, n_r=grid.n_r * factor, n_theta=grid.n_theta * factor),
        time=dataclasses.replace(config.time, snapshot_every=0),
    )
