"""
Small helpers shared by the persistence and plotting code.
"""
from __future__ import annotations
import math
from datetime import datetime
from typing import Optional


def format_float(x: float) -> str:
    """Shortest decimal that round-trips the binary64 value."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def timestamped(name: str, when: Optional[datetime] = None) -> str:
    """`name` with a sortable UTC timestamp appended, e.g. lens_2024-01-31_12-00-00."""
    when = when or datetime.utcnow()
    return f"{name}_{when:%Y-%m-%d_%H-%M-%S}"
