"""
Residual reports and observed convergence orders.
"""
from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

# Residuals this small are treated as exact; no order is derived from them
EXACT_FLOOR = 1e-12


@dataclass
class ResidualReport:
    identity: str
    residual: float
    order: Optional[float] = None
    passed: Optional[bool] = None
    spacing: Optional[float] = None
    scale: float = 1.0
    detail: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.residual = float(self.residual)
        if self.passed is None:
            self.passed = single_level_pass(self.residual, self.spacing, self.scale)

    @property
    def name(self) -> str:
        return self.identity

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "residual"
        return out


def single_level_pass(residual: float, spacing: Optional[float], scale: float = 1.0,
                      tolerance: float = 1e-10) -> bool:
    """Pass rule for one grid level.

    Pointwise algebraic identities (`spacing` None) must hold to `tolerance`; finite-difference
    identities may carry first-order truncation, at most 10 * spacing * (1 + scale).
    """
    if not math.isfinite(residual):
        return False
    if spacing is None:
        return residual <= tolerance
    return residual <= 10.0 * spacing * (1.0 + scale)


def observed_orders(spacings: Sequence[float], residuals: Sequence[float]) -> List[Optional[float]]:
    """Orders between consecutive levels, log(r_k / r_k+1) / log(h_k / h_k+1).

    An entry is None when either residual is below the exactness floor.
    """
    orders: List[Optional[float]] = []
    for k in range(len(residuals) - 1):
        a, b = residuals[k], residuals[k + 1]
        if a <= EXACT_FLOOR or b <= EXACT_FLOOR:
            orders.append(None)
            continue
        orders.append(math.log(a / b) / math.log(spacings[k] / spacings[k + 1]))
    return orders


def sweep_report(identity: str, spacings: Sequence[float], residuals: Sequence[float],
                 min_order: float) -> ResidualReport:
    """Multi-level report; passes when every order reaches `min_order` or the residuals are exact."""
    if len(residuals) < 2:
        raise ValueError("an order needs at least two grid levels")
    orders = observed_orders(spacings, residuals)
    finite = [o for o in orders if o is not None]
    exact = all(r <= EXACT_FLOOR for r in residuals[1:])
    order = min(finite) if finite else None
    passed = exact or (order is not None and order >= min_order)
    return ResidualReport(identity, residuals[-1], order=order, passed=bool(passed), spacing=spacings[-1],
                          detail={f"level_{k}": float(r) for k, r in enumerate(residuals)})


def max_abs(values: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    values = np.abs(values)
    if mask is not None:
        values = values[mask]
    return float(values.max()) if values.size else 0.0


@dataclass
class BoundReport:
    """Worst signed violation of a monitored bound; `passed` is None where the bound does not apply."""
    bound: str
    value: float
    limit: float
    passed: Optional[bool]
    detail: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def not_applicable(cls, bound: str, reason: str) -> BoundReport:
        report = cls(bound, math.nan, math.nan, None)
        report.detail["reason"] = reason
        return report

    @property
    def name(self) -> str:
        return self.bound

    @property
    def applicable(self) -> bool:
        return self.passed is not None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kind"] = "bound"
        return out
