"""
Dataclasses for run traces, per-step diagnostic records and snapshots.
"""
from __future__ import annotations
from dataclasses import asdict, dataclass, field, fields
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np

from src.contact_mcm.grid import PolarGrid, RadialGrid, grid_from_description

if TYPE_CHECKING:
    from src.contact_mcm.planar import PlanarState
    from src.contact_mcm.radial import RadialState

SNAPSHOT_FORMAT = "mcm-snapshot v1"
SERIES_COLUMNS = (
    "t", "dt", "radius", "sup_v", "H_min", "H_max", "h_eig_max", "angle_res", "orth_res", "p_min",
    "cont_fn",
)
RADIAL = "radial"
PLANAR = "planar"

T_END = "t_end"
EXTINCTION = "extinction"


def error_reason(code: str) -> str:
    return f"error({code})"


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    radius: float
    sup_v: float
    H_min: float
    H_max: float
    h_eig_max: float
    angle_res: float
    orth_res: float
    p_min: float
    cont_fn: float

    # Not part of series.csv
    sup_w: float = 0.0
    min_w: float = 0.0
    volume: float = 0.0
    h_norm_max: float = 0.0
    f_interior: float = 0.0
    f_boundary: float = 0.0
    H_boundary: float = 0.0
    min_jacobian: float = 0.0
    p_max: float = 0.0
    G_max: float = 0.0

    def series_row(self) -> List[float]:
        return [getattr(self, name) for name in SERIES_COLUMNS]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> StepRecord:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class Snapshot:
    step: int
    t: float
    solver: str
    grid: Dict[str, Any]
    fields: Dict[str, np.ndarray]
    # Mean curvature at capture time, recomputed and compared by verify
    derived: Dict[str, np.ndarray] = field(default_factory=dict)
    format: str = SNAPSHOT_FORMAT

    @classmethod
    def capture(cls, state, step: int, H: Optional[np.ndarray] = None) -> Snapshot:
        from src.contact_mcm.planar import PlanarState

        derived = {} if H is None else {"H": np.asarray(H, dtype=float).copy()}
        if isinstance(state, PlanarState):
            return cls(step, float(state.t), PLANAR, state.grid.describe(),
                       {"phi1": state.phi1.copy(), "phi2": state.phi2.copy(), "u": state.u.copy()},
                       derived)
        return cls(step, float(state.t), RADIAL, state.grid.describe(),
                   {"u": state.u.copy(), "phi": state.phi.copy()}, derived)

    def state(self):
        """Rebuild the solver state the snapshot was taken from."""
        grid = grid_from_description(self.grid)
        if self.solver == PLANAR:
            from src.contact_mcm.planar import PlanarState
            assert isinstance(grid, PolarGrid)
            return PlanarState(self.t, self.fields["phi1"], self.fields["phi2"], self.fields["u"], grid)
        from src.contact_mcm.radial import RadialState
        assert isinstance(grid, RadialGrid)
        return RadialState(self.t, self.fields["u"], self.fields["phi"], grid)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return NotImplemented
        same_arrays = (
            self.fields.keys() == other.fields.keys()
            and self.derived.keys() == other.derived.keys()
            and all(np.array_equal(self.fields[k], other.fields[k]) for k in self.fields)
            and all(np.array_equal(self.derived[k], other.derived[k]) for k in self.derived)
        )
        return (same_arrays and self.step == other.step and self.t == other.t
                and self.solver == other.solver and self.grid == other.grid
                and self.format == other.format)


@dataclass
class RunTrace:
    solver: str
    config: Dict[str, Any]
    initial: Optional[StepRecord] = None
    records: List[StepRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    exit_reason: str = T_END
    error_message: Optional[str] = None

    # In-memory only
    final_state: Any = None

    @property
    def steps(self) -> int:
        return self.records[-1].step if self.records else 0

    @property
    def failed(self) -> bool:
        return self.exit_reason.startswith("error(")

    @property
    def extinct(self) -> bool:
        return self.exit_reason == EXTINCTION

    def all_records(self) -> List[StepRecord]:
        """Initial record followed by the per-step records."""
        head = [self.initial] if self.initial is not None else []
        return head + self.records
