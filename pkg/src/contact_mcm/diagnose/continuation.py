"""
Continuation functional sup over the free boundary of |h|_g + |nabla^tan h^tan|_g, whose
blow-up marks the maximal existence time.
"""
from __future__ import annotations
import math
from dataclasses import dataclass

import numpy as np

from src.contact_mcm.diagnose.report import BoundReport
from src.contact_mcm.trace import RunTrace

FINAL_FRACTION = 0.1


@dataclass(frozen=True)
class ContinuationReport:
    t: np.ndarray
    values: np.ndarray
    # non-decreasing over the final tenth of the recorded steps
    monotone_tail: bool
    growth: float

    def to_bound(self) -> BoundReport:
        """Informational record; nothing is asserted about the blow-up."""
        return BoundReport("continuation", float(self.values[-1]), math.inf, None, {
            "monotone_tail": bool(self.monotone_tail),
            "growth": float(self.growth),
            "first": float(self.values[0]),
        })


def continuation_monitor(trace: RunTrace) -> ContinuationReport:
    records = trace.all_records()
    t = np.array([r.t for r in records])
    values = np.array([r.cont_fn for r in records])
    tail = max(2, int(np.ceil(FINAL_FRACTION * len(values))))
    monotone = bool(np.all(np.diff(values[-tail:]) >= 0)) if len(values) >= 2 else True
    growth = float(values[-1] / values[0]) if values.size and values[0] > 0 else float("nan")
    return ContinuationReport(t, values, monotone, growth)
