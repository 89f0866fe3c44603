import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.contact_mcm.diagnose.boundary import check_boundary_identities
from src.contact_mcm.diagnose.fields import graph_jets
from src.contact_mcm.diagnose.monitor import catenoid_drift, enclosed_volume
from src.contact_mcm.diagnose.pointwise import (conformal_frame_check, conformal_frame_residuals,
                                                normal_identities, trace_identity)
from src.contact_mcm.diagnose.reconstruct import physical_spacing, probe_grid, radial_sampler
from src.contact_mcm.diagnose.support import support_function
from src.contact_mcm.diagnose.velocity import flux_identity
from src.contact_mcm.errors import NotApplicable, OriginOutside, ReconstructionFailure
from src.contact_mcm.grid import LENS, RadialGrid
from src.contact_mcm.radial import RadialState

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


def paraboloid(n: int = 64) -> RadialState:
    grid = RadialGrid(LENS, n)
    r = grid.nodes
    return RadialState(0.0, 1.0 - r * r, r.copy(), grid)


class TestGraphJets:

    def test_radial_jets_of_paraboloid(self):
        state = paraboloid()
        jets = graph_jets(state)
        r = state.grid.nodes
        np.testing.assert_allclose(jets.geom.dw[:, 0], -2 * r, atol=1e-10)
        np.testing.assert_allclose(jets.geom.d2w[:, 1, 1], -2.0, atol=1e-10)
        assert jets.boundary(jets.w)[0] == pytest.approx(0.0, abs=1e-15)

    def test_normal_derivative_points_inward(self):
        state = paraboloid()
        jets = graph_jets(state)
        # w = 1 - rho^2 grows toward the centre: d_n w = 2 on the unit circle
        assert jets.normal_derivative(jets.w)[0] == pytest.approx(2.0, abs=1e-10)

    def test_normal_derivative_ignores_the_contact_value(self):
        jets = graph_jets(paraboloid())
        shifted = jets.w.copy()
        shifted[-1] += 1.0
        assert jets.normal_derivative(shifted)[0] == jets.normal_derivative(jets.w)[0]


class TestPointwise:

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (1, 2), elements=finite), arrays(np.float64, (1, 3), elements=finite))
    def test_conformal_frame_identities_are_algebraic(self, dw, abc):
        a, b, c = abc[0]
        d2w = np.array([[[a, b], [b, c]]])
        res = conformal_frame_residuals(dw, d2w)
        for name in ("cross", "length_omega", "length_omega_tilde", "determinant"):
            field, scale = res[name]
            assert np.abs(field).max() <= 1e-9 * (1 + np.abs(scale).max()), name

    def test_normal_identities(self, lens_seed, half_angle):
        assert all(r.passed for r in normal_identities(lens_seed, half_angle))

    def test_concave_seed_keeps_the_frame_sign(self, lens_seed, half_angle):
        report = conformal_frame_check(lens_seed, half_angle, concave=True)
        assert report.passed
        assert report.detail["max_h2_minus_Hh"] <= 1e-10

    def test_trace_identity(self, lens_trace, half_angle):
        snapshot = lens_trace.snapshots[-1]
        assert trace_identity(snapshot, half_angle).passed
        corrupted = dataclasses.replace(snapshot, derived={"H": snapshot.derived["H"] + 1e-3})
        assert not trace_identity(corrupted, half_angle).passed

    def test_trace_identity_needs_stored_curvature(self, lens_trace, half_angle):
        bare = dataclasses.replace(lens_trace.snapshots[-1], derived={})
        with pytest.raises(NotApplicable):
            trace_identity(bare, half_angle)


class TestBoundaryIdentities:

    def test_names_and_split(self, lens_trace, half_angle):
        reports = check_boundary_identities(lens_trace.snapshots[-1].state(), half_angle)
        assert [r.identity for r in reports] == [
            "h_split", "normal_derivative_H", "normal_derivative_h_tt", "normal_derivative_h_nn",
            "normal_derivative_h_norm2"]
        # radial states are diagonal in the (n, tau) frame
        assert reports[0].residual == 0.0
        assert all(math.isfinite(r.residual) for r in reports)


class TestSupportFunction:

    def test_boundary_value_on_seed(self, lens_seed, half_angle):
        support = support_function(lens_seed, half_angle)
        assert support.p_min > 0
        assert support.boundary_value_residual < 1e-12

    def test_origin_off_the_axis(self, lens_seed, half_angle):
        with pytest.raises(OriginOutside):
            support_function(lens_seed, half_angle, origin=(0.1, 0.0, 0.0))

    def test_origin_above_the_lens(self, lens_seed, half_angle):
        with pytest.raises(OriginOutside):
            support_function(lens_seed, half_angle, origin=(0.0, 0.0, 10.0))


class TestReconstruction:

    def test_sampler_reproduces_nodes(self, lens_seed):
        sample = radial_sampler(lens_seed)
        along_x = np.stack((lens_seed.phi, np.zeros_like(lens_seed.phi)), axis=-1)
        along_y = along_x[:, ::-1]
        np.testing.assert_allclose(sample(along_x), lens_seed.u, atol=1e-12)
        np.testing.assert_allclose(sample(along_y), lens_seed.u, atol=1e-12)

    def test_points_outside_the_domain(self, lens_seed):
        with pytest.raises(ReconstructionFailure):
            radial_sampler(lens_seed)(np.array([[1.5 * lens_seed.radius, 0.0]]))

    def test_probe_grid_stays_inside(self, lens_seed):
        spacing = physical_spacing(lens_seed)
        grid, mask = probe_grid([lens_seed], spacing)
        radii = np.linalg.norm(grid.points, axis=-1)
        assert radii.max() < lens_seed.radius
        assert mask.sum() > 0 and not mask[0].any()

    def test_probe_grid_too_coarse(self, lens_seed):
        with pytest.raises(ReconstructionFailure):
            probe_grid([lens_seed], 0.5)


class TestMonitor:

    def test_volume_of_paraboloid(self):
        assert enclosed_volume(paraboloid(128)) == pytest.approx(0.5 * math.pi, rel=1e-3)

    def test_flux_identity_on_seed(self, lens_seed, half_angle):
        report = flux_identity(lens_seed, half_angle)
        assert report.passed
        assert report.detail["boundary_term"] == pytest.approx(-half_angle.beta0 * 2 * math.pi * lens_seed.radius)

    def test_catenoid_drift_of_seed(self, catenoid):
        state, _ = catenoid
        assert catenoid_drift(state, skip_contact=True) < 1e-12
        assert catenoid_drift(state) < 1e-3
