"""
Maximum-principle bounds monitored over a run trace, and the finite extinction-time bound.
"""
from __future__ import annotations
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from src.contact_mcm.diagnose.report import BoundReport
from src.contact_mcm.errors import NotApplicable
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import LENS
from src.contact_mcm.trace import PLANAR, RunTrace, StepRecord

logger = logging.getLogger(__name__)

RELATIVE_TOLERANCE = 1e-3
HEIGHT_TOLERANCE = 1e-8
CONCAVE_TOLERANCE = 1e-6
VOLUME_TOLERANCE = 1e-8
SUPPORT_SHRINK = 0.2
DIMENSION = 2


def is_lens(trace: RunTrace) -> bool:
    return trace.solver == PLANAR or trace.config.get("kind") == LENS


def angle_from_trace(trace: RunTrace) -> ContactAngle:
    echo = trace.config["angle"]
    return ContactAngle(echo["beta"], echo.get("beta0"))


def _concave(record: StepRecord) -> bool:
    return record.h_eig_max <= CONCAVE_TOLERANCE


@dataclass
class MonotoneBoundsReport:
    bounds: List[BoundReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(b.passed is not False for b in self.bounds)

    def __getitem__(self, name: str) -> BoundReport:
        for bound in self.bounds:
            if bound.bound == name:
                return bound
        raise KeyError(name)

    def to_dicts(self) -> List[dict]:
        return [b.to_dict() for b in self.bounds]


def height_bound(trace: RunTrace) -> BoundReport:
    first = trace.initial
    if not is_lens(trace) or first.sup_w <= 0:
        return BoundReport.not_applicable("height", "needs a lens with positive initial height")
    later = trace.records or [first]
    top = max(r.sup_w for r in later)
    bottom = min(r.min_w for r in later)
    value = max(top - first.sup_w, -bottom)
    return BoundReport("height", value, HEIGHT_TOLERANCE, value <= HEIGHT_TOLERANCE,
                       {"max_w": top, "min_w": bottom, "initial_max_w": first.sup_w})


def gradient_bound(trace: RunTrace, angle: ContactAngle) -> BoundReport:
    first = trace.initial
    limit = max(first.sup_v, 1.0 / angle.beta) * (1.0 + RELATIVE_TOLERANCE)
    value = max(r.sup_v for r in trace.all_records())
    return BoundReport("gradient", value, limit, value <= limit, {"initial_sup_v": first.sup_v})


def concavity_bound(trace: RunTrace) -> BoundReport:
    if not _concave(trace.initial):
        return BoundReport.not_applicable("concavity", "initial state is not weakly concave")
    value = max(r.h_eig_max for r in trace.all_records())
    return BoundReport("concavity", value, CONCAVE_TOLERANCE, value <= CONCAVE_TOLERANCE)


def mean_curvature_bound(trace: RunTrace, angle: ContactAngle) -> BoundReport:
    """H <= max H(0) for concave two-dimensional runs with beta > 1/sqrt(3) and v <= sqrt(3)."""
    first = trace.initial
    applicable = (is_lens(trace) and angle.beta > 1.0 / math.sqrt(3.0)
                  and first.sup_v <= math.sqrt(3.0) * (1 + 1e-12) and _concave(first) and first.H_max < 0)
    if not applicable:
        return BoundReport.not_applicable(
            "mean_curvature", "needs beta > 1/sqrt(3), sup v0 <= sqrt(3), a concave seed and max H0 < 0")
    limit = first.H_max + RELATIVE_TOLERANCE
    value = max(r.H_max for r in trace.all_records())
    return BoundReport("mean_curvature", value, limit, value <= limit, {"H0": first.H_max})


def parabolic_boundary_bound(trace: RunTrace) -> BoundReport:
    """f = |h|^2 v^2 away from the boundary stays below its values on the parabolic boundary."""
    first = trace.initial
    if not _concave(first) or not trace.records:
        return BoundReport.not_applicable("parabolic_boundary", "needs a concave run with steps")
    boundary = max([first.f_interior, first.f_boundary] + [r.f_boundary for r in trace.records])
    limit = boundary * (1.0 + RELATIVE_TOLERANCE)
    value = max(r.f_interior for r in trace.records)
    return BoundReport("parabolic_boundary", value, limit, value <= limit)


def volume_bound(trace: RunTrace) -> BoundReport:
    """Largest increase of the enclosed volume between consecutive records."""
    records = trace.all_records()
    if not is_lens(trace) or not _concave(trace.initial) or len(records) < 2:
        return BoundReport.not_applicable("volume", "needs a concave lens run with steps")
    value = max(b.volume - a.volume for a, b in zip(records, records[1:]))
    return BoundReport("volume", value, VOLUME_TOLERANCE, value <= VOLUME_TOLERANCE)


def support_bound(trace: RunTrace) -> BoundReport:
    if not is_lens(trace) or not _concave(trace.initial):
        return BoundReport.not_applicable("support_positive", "needs a concave lens run")
    value = min(r.p_min for r in trace.all_records())
    return BoundReport("support_positive", -value, 0.0, value > 0,
                       {"initial_p_min": trace.initial.p_min, "final_p_min": trace.all_records()[-1].p_min})


def support_ceiling_bound(trace: RunTrace) -> BoundReport:
    """p <= p0 = max |G0|; the bodies are nested, so the initial one contains every later one."""
    first = trace.initial
    if not is_lens(trace) or not _concave(first) or first.G_max <= 0:
        return BoundReport.not_applicable("support_ceiling",
                                          "needs a concave lens run with a recorded max |G0|")
    limit = first.G_max * (1.0 + RELATIVE_TOLERANCE)
    value = max(r.p_max for r in trace.all_records())
    return BoundReport("support_ceiling", value, limit, value <= limit, {"p0": first.G_max})


def support_shrink_bound(trace: RunTrace) -> BoundReport:
    """Final p_min at most a fifth of the initial one for runs that reach extinction."""
    first = trace.initial
    if not is_lens(trace) or not _concave(first) or not trace.extinct:
        return BoundReport.not_applicable("support_shrink", "needs a concave lens run reaching extinction")
    value = trace.all_records()[-1].p_min
    limit = SUPPORT_SHRINK * first.p_min
    return BoundReport("support_shrink", value, limit, value <= limit, {"initial_p_min": first.p_min})


def bounds_monitor(trace: RunTrace, angle: Optional[ContactAngle] = None) -> MonotoneBoundsReport:
    if trace.initial is None:
        raise NotApplicable("trace has no initial record")
    angle = angle or angle_from_trace(trace)
    report = MonotoneBoundsReport([
        height_bound(trace),
        gradient_bound(trace, angle),
        concavity_bound(trace),
        mean_curvature_bound(trace, angle),
        parabolic_boundary_bound(trace),
        volume_bound(trace),
        support_bound(trace),
        support_ceiling_bound(trace),
        support_shrink_bound(trace),
    ])
    for bound in report.bounds:
        if bound.passed is False:
            logger.warning(f"bound '{bound.bound}' violated: {bound.value!r} > {bound.limit!r}")
    return report


###################################################################################################
# Extinction time
###################################################################################################

def extinction_time(H0: float, c: float) -> float:
    """Blow-up time of the comparison ODE H' = c H^3 started at H0 < 0."""
    return 1.0 / (2.0 * H0 * H0 * c)


@dataclass(frozen=True)
class ExtinctionBound:
    """Measured extinction time against the comparison bounds.

    `t_star` uses the constant c = 1/n + (v^2 - 1) of the classical statement and is reported for
    information only. The enforced bound is `interior_t_star` with c = 1/n: L[H] = |h|^2 H <= H^3 / n
    since |h|^2 >= H^2 / n and H < 0, which gives t* = 1 / H0^2 in the plane. `corrected_t_star` uses
    c = 1/n - (v^2 - 1) and is enforced as well when that constant is positive.
    """
    t_measured: float
    t_star: float
    passed: bool
    H0: float
    v_bar: float
    c: float
    interior_c: float
    interior_t_star: float
    interior_passed: bool
    corrected_c: float
    corrected_t_star: Optional[float]
    corrected_passed: Optional[bool]

    def __iter__(self):
        return iter((self.t_measured, self.t_star, self.passed))

    def reports(self) -> List[BoundReport]:
        detail = asdict(self)
        stated = BoundReport("extinction_time", self.t_measured, self.t_star, None, dict(detail))
        interior = BoundReport("extinction_time_interior", self.t_measured, self.interior_t_star,
                               self.interior_passed, dict(detail))
        if self.corrected_t_star is None:
            corrected = BoundReport.not_applicable("extinction_time_corrected",
                                                   f"corrected constant {self.corrected_c!r} is not positive")
        else:
            corrected = BoundReport("extinction_time_corrected", self.t_measured, self.corrected_t_star,
                                    self.corrected_passed, dict(detail))
        return [stated, interior, corrected]


def extinction_bound(trace: RunTrace, angle: Optional[ContactAngle] = None) -> ExtinctionBound:
    """Compare the measured extinction time with 1 / (2 H0^2 c).

    :raises NotApplicable: the run did not reach extinction or its seed is not concave with
                           max H(0) < 0
    """
    if not trace.extinct:
        raise NotApplicable(f"run ended with '{trace.exit_reason}', not extinction")
    angle = angle or angle_from_trace(trace)
    first = trace.initial
    if not _concave(first) or first.H_max >= 0:
        raise NotApplicable("extinction bound needs a concave seed with max H(0) < 0")
    H0 = first.H_max
    v_bar = max(first.sup_v, 1.0 / angle.beta)
    gradient = v_bar * v_bar - 1.0
    c = 1.0 / DIMENSION + gradient
    t_star = extinction_time(H0, c)
    t_measured = trace.all_records()[-1].t
    interior_c = 1.0 / DIMENSION
    interior_t = extinction_time(H0, interior_c)
    corrected_c = 1.0 / DIMENSION - gradient
    corrected_t = extinction_time(H0, corrected_c) if corrected_c > 0 else None
    corrected_passed = None if corrected_t is None else t_measured <= corrected_t
    logger.info(f"extinction at t={t_measured!r}: enforced bound {interior_t!r}, stated {t_star!r}, "
                f"corrected {corrected_t!r}")
    return ExtinctionBound(t_measured, t_star, t_measured <= t_star, H0, v_bar, c, interior_c, interior_t,
                           t_measured <= interior_t, corrected_c, corrected_t, corrected_passed)
