import math

import numpy as np
import pytest

from src.contact_mcm.diagnose.bounds import (bounds_monitor, extinction_bound, gradient_bound, height_bound,
                                             mean_curvature_bound, support_bound, support_ceiling_bound,
                                             support_shrink_bound, volume_bound)
from src.contact_mcm.diagnose.continuation import continuation_monitor
from src.contact_mcm.diagnose.velocity import boundary_velocity_residual, flux_identity
from src.contact_mcm.errors import NotApplicable
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.trace import EXTINCTION, RADIAL, T_END, RunTrace, StepRecord


def record(step: int = 0, t: float = 0.0, **values) -> StepRecord:
    base = dict(dt=1e-3, radius=1.0, sup_v=1.5, H_min=-2.0, H_max=-1.0, h_eig_max=-0.1, angle_res=0.0,
                orth_res=0.0, p_min=0.2, cont_fn=1.0, sup_w=1.0, min_w=0.0, volume=1.0)
    base.update(values)
    return StepRecord(step, t, **base)


def make_trace(initial: StepRecord, records, beta: float = 0.5, kind: str = "lens",
               exit_reason: str = T_END) -> RunTrace:
    config = {"angle": {"beta": beta, "beta0": math.sqrt(1 - beta * beta)}, "kind": kind}
    return RunTrace(RADIAL, config, initial, list(records), exit_reason=exit_reason)


class TestExtinction:

    def test_stated_constant(self):
        trace = make_trace(record(sup_v=1.5), [record(1, 0.1)], exit_reason=EXTINCTION)
        bound = extinction_bound(trace)
        # v_bar = 1 / beta = 2, c = 1/2 + 3
        assert bound.t_star == pytest.approx(1.0 / 7.0)
        assert bound.c == pytest.approx(3.5)
        t_measured, t_star, passed = bound
        assert t_measured == 0.1 and passed

    def test_corrected_constant_not_positive(self):
        trace = make_trace(record(), [record(1, 0.1)], exit_reason=EXTINCTION)
        bound = extinction_bound(trace)
        assert bound.corrected_t_star is None
        stated, interior, corrected = bound.reports()
        assert stated.passed is None
        assert interior.passed is True
        assert not corrected.applicable

    def test_gradient_free_constant_is_enforced(self):
        # H0 = -1.05: t* = 1 / H0^2, well above the stated 1 / (2 H0^2 3.5)
        initial = record(sup_v=1.5, H_max=-1.05)
        early = extinction_bound(make_trace(initial, [record(1, 0.2544)], exit_reason=EXTINCTION))
        assert early.interior_c == pytest.approx(0.5)
        assert early.interior_t_star == pytest.approx(1 / 1.05 ** 2)
        assert early.interior_passed
        assert not early.passed
        late = extinction_bound(make_trace(initial, [record(1, 0.95)], exit_reason=EXTINCTION))
        assert late.reports()[1].passed is False

    def test_corrected_bound_is_enforced(self):
        trace = make_trace(record(sup_v=1.0), [record(1, 1.0)], beta=0.9, exit_reason=EXTINCTION)
        bound = extinction_bound(trace)
        assert bound.corrected_c == pytest.approx(0.5 - (1 / 0.81 - 1))
        assert bound.corrected_t_star == pytest.approx(1.8837, abs=1e-3)
        assert bound.t_star == pytest.approx(0.6807, abs=1e-3)
        assert not bound.passed
        assert bound.corrected_passed
        assert bound.reports()[2].passed is True

    def test_run_without_extinction(self):
        trace = make_trace(record(), [record(1, 0.1)])
        with pytest.raises(NotApplicable):
            extinction_bound(trace)

    def test_convex_seed(self):
        trace = make_trace(record(h_eig_max=0.5), [record(1, 0.1)], exit_reason=EXTINCTION)
        with pytest.raises(NotApplicable):
            extinction_bound(trace)


class TestMonotoneBounds:

    def test_height_never_grows(self):
        ok = make_trace(record(), [record(1, 0.1, sup_w=0.9), record(2, 0.2, sup_w=0.8)])
        assert height_bound(ok).passed
        grown = make_trace(record(), [record(1, 0.1, sup_w=1.1)])
        assert height_bound(grown).passed is False

    def test_height_needs_a_lens(self):
        trace = make_trace(record(), [record(1, 0.1)], kind="exterior")
        assert not height_bound(trace).applicable

    def test_gradient_limit(self):
        angle = ContactAngle(0.5)
        ok = make_trace(record(sup_v=1.5), [record(1, 0.1, sup_v=2.0)])
        assert gradient_bound(ok, angle).limit == pytest.approx(2.0 * 1.001)
        assert gradient_bound(ok, angle).passed
        steep = make_trace(record(sup_v=1.5), [record(1, 0.1, sup_v=2.5)])
        assert gradient_bound(steep, angle).passed is False

    def test_mean_curvature_bound(self):
        angle = ContactAngle(0.6)
        ok = make_trace(record(sup_v=1.5, H_max=-1.0), [record(1, 0.1, H_max=-1.2)])
        assert mean_curvature_bound(ok, angle).passed
        risen = make_trace(record(sup_v=1.5, H_max=-1.0), [record(1, 0.1, H_max=-0.5)])
        assert mean_curvature_bound(risen, angle).passed is False

    def test_mean_curvature_bound_needs_large_angle(self):
        trace = make_trace(record(sup_v=1.5), [record(1, 0.1)])
        assert not mean_curvature_bound(trace, ContactAngle(0.5)).applicable

    def test_volume_and_support(self):
        ok = make_trace(record(), [record(1, 0.1, volume=0.9, p_min=0.1)])
        assert volume_bound(ok).passed
        assert support_bound(ok).passed
        bad = make_trace(record(), [record(1, 0.1, volume=1.1, p_min=-0.1)])
        assert volume_bound(bad).passed is False
        assert support_bound(bad).passed is False

    def test_support_stays_below_the_initial_radius(self):
        initial = record(p_max=0.9, G_max=1.0)
        ok = make_trace(initial, [record(1, 0.1, p_max=0.8, G_max=0.9)])
        assert support_ceiling_bound(ok).passed
        assert support_ceiling_bound(ok).limit == pytest.approx(1.001)
        escaped = make_trace(initial, [record(1, 0.1, p_max=1.2)])
        assert support_ceiling_bound(escaped).passed is False

    def test_support_shrinks_towards_extinction(self):
        initial = record(p_min=0.8165)
        shrunk = make_trace(initial, [record(1, 0.25, p_min=0.0238)], exit_reason=EXTINCTION)
        assert support_shrink_bound(shrunk).passed
        stalled = make_trace(initial, [record(1, 0.25, p_min=0.5)], exit_reason=EXTINCTION)
        assert support_shrink_bound(stalled).passed is False
        assert not support_shrink_bound(make_trace(initial, [record(1, 0.1)])).applicable

    def test_monitor_collects_every_bound(self):
        trace = make_trace(record(), [record(1, 0.1, sup_w=0.9, volume=0.9)])
        report = bounds_monitor(trace)
        assert [b.bound for b in report.bounds] == [
            "height", "gradient", "concavity", "mean_curvature", "parabolic_boundary", "volume",
            "support_positive", "support_ceiling", "support_shrink"]
        assert report.passed
        assert report["concavity"].passed

    def test_monitor_needs_an_initial_record(self):
        with pytest.raises(NotApplicable):
            bounds_monitor(make_trace(None, []))


def test_continuation_tail():
    records = [record(k, 0.01 * k, cont_fn=1.0 + k * k) for k in range(20)]
    report = continuation_monitor(make_trace(records[0], records[1:]))
    assert report.monotone_tail
    assert report.growth == pytest.approx(1.0 + 19 * 19)
    assert report.to_bound().passed is None


class TestBoundaryVelocity:

    @pytest.mark.parametrize("kind,direction", [("lens", -1.0), ("exterior", 1.0)])
    def test_exact_motion(self, kind, direction):
        angle = ContactAngle(0.5)
        times = np.linspace(0.0, 0.1, 11)
        records = [record(k, t, radius=1.0 + direction * t / angle.beta0, H_boundary=-1.0)
                   for k, t in enumerate(times)]
        trace = make_trace(records[0], records[1:], kind=kind)
        assert boundary_velocity_residual(trace, angle) == pytest.approx(0.0, abs=1e-10)

    def test_wrong_direction(self):
        angle = ContactAngle(0.5)
        records = [record(k, 0.01 * k, radius=1.0 + 0.01 * k / angle.beta0, H_boundary=-1.0)
                   for k in range(5)]
        trace = make_trace(records[0], records[1:])
        assert boundary_velocity_residual(trace, angle) == pytest.approx(2.0 / angle.beta0)

    def test_needs_three_records(self):
        trace = make_trace(record(), [record(1, 0.1)])
        with pytest.raises(NotApplicable):
            boundary_velocity_residual(trace, ContactAngle(0.5))


def test_flux_identity_needs_a_lens(catenoid, half_angle):
    state, _ = catenoid
    with pytest.raises(NotApplicable):
        flux_identity(state, half_angle)
