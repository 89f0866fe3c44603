"""
SVG profile plots of stored snapshots.

Figures are drawn at 72 dpi so one point is one pixel, with axes filling their panel; a data
point (x, y) lands at the pixel given by `to_pixels` with the limits from `plot_limits`. Curves
carry SVG ids (`profile`, `mirror`, `baseline`, `boundary`) so they can be located in the output.
"""
from __future__ import annotations
import logging
from pathlib import Path
from typing import List, Tuple

import matplotlib
from matplotlib.figure import Figure
import numpy as np

from src.contact_mcm.errors import StorageError
from src.contact_mcm.trace import PLANAR, Snapshot

logger = logging.getLogger(__name__)

DPI = 72
ASPECT = 0.5
PADDING = 0.05
RC = {
    "path.simplify": False,
    "svg.fonttype": "none",
    "svg.hashsalt": "contact-mcm",
    "svg.image_inline": True,
}

Limits = Tuple[float, float, float, float]


def plot_limits(x: np.ndarray, y: np.ndarray, mirror: bool = False) -> Limits:
    """Padded data box of a profile; with `mirror` it also covers the reflection y -> -y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if mirror:
        y = np.concatenate((y, -y, [0.0]))
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    px = PADDING * max(x1 - x0, 1e-12)
    py = PADDING * max(y1 - y0, 1e-12)
    return x0 - px, x1 + px, y0 - py, y1 + py


def to_pixels(x: np.ndarray, y: np.ndarray, limits: Limits, width: float, height: float,
              left: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """SVG user coordinates of data points drawn into a panel `width` x `height` at offset `left`."""
    x0, x1, y0, y1 = limits
    px = left + (np.asarray(x) - x0) / (x1 - x0) * width
    py = height - (np.asarray(y) - y0) / (y1 - y0) * height
    return px, py


def profile_curve(snapshot: Snapshot) -> Tuple[np.ndarray, np.ndarray]:
    """Radial profile (phi, u), or the theta = 0 cross-section of a planar snapshot."""
    fields = snapshot.fields
    if snapshot.solver == PLANAR:
        return fields["phi1"][:, 0].copy(), fields["u"][:, 0].copy()
    return fields["phi"].copy(), fields["u"].copy()


def _panel(fig: Figure, rect: List[float], limits: Limits):
    ax = fig.add_axes(rect)
    ax.set_xlim(limits[0], limits[1])
    ax.set_ylim(limits[2], limits[3])
    ax.set_axis_off()
    return ax


def _draw_profile(ax, x: np.ndarray, y: np.ndarray, triple: bool) -> None:
    (line,) = ax.plot(x, y, color="tab:blue", linewidth=1.5)
    line.set_gid("profile")
    if triple:
        (mirror,) = ax.plot(x, -y, color="tab:orange", linewidth=1.5)
        mirror.set_gid("mirror")
        (base,) = ax.plot([float(x.min()), float(x.max())], [0.0, 0.0], color="black", linewidth=1.0)
        base.set_gid("baseline")


def profile_figure(snapshot: Snapshot, width: int, triple: bool = False) -> Figure:
    height = width * ASPECT
    fig = Figure(figsize=(width / DPI, height / DPI), dpi=DPI)
    x, y = profile_curve(snapshot)
    if snapshot.solver == PLANAR:
        ring_x = np.append(snapshot.fields["phi1"][-1], snapshot.fields["phi1"][-1, 0])
        ring_y = np.append(snapshot.fields["phi2"][-1], snapshot.fields["phi2"][-1, 0])
        ax = _panel(fig, [0.0, 0.0, 0.5, 1.0], plot_limits(ring_x, ring_y))
        (ring,) = ax.plot(ring_x, ring_y, color="black", linewidth=1.5)
        ring.set_gid("boundary")
        ax.set_aspect("auto")
        section = _panel(fig, [0.5, 0.0, 0.5, 1.0], plot_limits(x, y, triple))
        _draw_profile(section, x, y, triple)
    else:
        ax = _panel(fig, [0.0, 0.0, 1.0, 1.0], plot_limits(x, y, triple))
        _draw_profile(ax, x, y, triple)
    ax.set_title(f"t = {snapshot.t!r}", fontsize=8, loc="left", y=0.9)
    return fig


def write_profile(directory: Path, snapshot: Snapshot, width: int, triple: bool = False) -> Path:
    path = Path(directory) / f"profile_{snapshot.step:06d}.svg"
    with matplotlib.rc_context(RC):
        fig = profile_figure(snapshot, width, triple)
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise StorageError(f"cannot write '{path}': {e}") from e
    logger.debug(f"wrote {path}")
    return path


def plot_snapshots(directory: Path, snapshots: List[Snapshot], width: int, triple: bool = False) -> List[Path]:
    """One SVG per snapshot; nothing is written for an empty list."""
    return [write_profile(directory, s, width, triple) for s in snapshots]
