import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.contact_mcm.diagnose.monitor import catenoid_drift
from src.contact_mcm.diagnose.reconstruct import graph_sampler
from src.contact_mcm.driver import PlanarDriver, RadialDriver, run_loop
from src.contact_mcm.errors import DomainError, StepUnderflow
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import EXTERIOR, LENS, RadialGrid
from src.contact_mcm.planar import PlanarConfig, radial_embedding
from src.contact_mcm.radial import (NONE, PINNED, PRINTED, OuterBoundary, RadialConfig, RadialState,
                                    advance, angle_residual, apply_bcs, catenoid_profile,
                                    normal_speed_defect, radial_mean_curvature, squared_angle_residual,
                                    stable_dt, step)
from src.contact_mcm.seed import catenoid_seed, lens_profile, radial_seed


def smooth_lens(grid: RadialGrid, stretch: float = 0.2) -> RadialState:
    r = grid.nodes
    return RadialState(0.0, 1.0 - r * r, (1 - stretch) * r + stretch * r ** 3, grid)


class TestConfig:

    def test_lens_rejects_outer_boundary(self):
        with pytest.raises(DomainError):
            RadialConfig(LENS, ContactAngle(0.5), 32, OuterBoundary(PINNED, 0.0, 3.0))

    def test_exterior_needs_outer_boundary(self):
        with pytest.raises(DomainError):
            RadialConfig(EXTERIOR, ContactAngle(0.5), 32, OuterBoundary(NONE))

    def test_minimum_nodes(self):
        with pytest.raises(DomainError, match="n_nodes >= 16"):
            RadialConfig(LENS, ContactAngle(0.5), 15)


class TestCatenoid:

    def test_profile_meets_plane_with_slope_sqrt3(self):
        assert catenoid_profile(1.0) == pytest.approx(0.0, abs=1e-15)
        assert catenoid_profile(1.0, derivative=True) == pytest.approx(math.sqrt(3.0))

    def test_profile_below_neck(self):
        with pytest.raises(DomainError):
            catenoid_profile(0.5)

    def test_mean_curvature_vanishes(self, catenoid):
        state, _ = catenoid
        H = radial_mean_curvature(state).values
        # second order stencils, spacing 0.05; node 1 sees the solved contact node
        assert np.abs(H[2:-1]).max() < 0.05

    def test_seed_satisfies_discrete_angle_condition(self, catenoid, half_angle):
        state, outer = catenoid
        assert abs(state.u[0]) < 1e-14
        assert angle_residual(state, half_angle) < 1e-12
        assert outer.kind == PINNED
        assert state.u[-1] == pytest.approx(catenoid_profile(3.0))


class TestSplitGauge:

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=0.0, max_value=0.3), st.floats(min_value=0.2, max_value=2.0))
    def test_derived_form_moves_normally_by_mean_curvature(self, stretch, height):
        grid = RadialGrid(LENS, 24)
        r = grid.nodes
        state = RadialState(0.0, height * (1 - r * r), (1 - stretch) * r + stretch * r ** 3, grid)
        np.testing.assert_allclose(normal_speed_defect(state), 0.0, atol=1e-9)

    def test_printed_form_does_not(self):
        state = smooth_lens(RadialGrid(LENS, 24))
        assert np.abs(normal_speed_defect(state, PRINTED)).max() > 1e-2

    def test_unknown_form(self):
        with pytest.raises(ValueError):
            normal_speed_defect(smooth_lens(RadialGrid(LENS, 24)), "other")


class TestBoundaryConditions:

    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
    def test_lens_contact_node(self, beta):
        angle = ContactAngle(beta)
        config = RadialConfig(LENS, angle, 24)
        state = apply_bcs(smooth_lens(config.grid), config)
        assert abs(state.u[-1]) < 1e-14
        assert angle_residual(state, angle) < 1e-12
        assert abs(squared_angle_residual(state, angle)) < 1e-10

    def test_vertical_wall_has_flat_outer_slope(self, catenoid, half_angle):
        state, _ = catenoid
        config = RadialConfig(EXTERIOR, half_angle, state.grid.n_nodes, OuterBoundary("vertical_wall", 0.0, 3.0))
        walled = apply_bcs(state, config)
        u = walled.u
        assert 11 * u[-1] - 18 * u[-2] + 9 * u[-3] - 2 * u[-4] == pytest.approx(0.0, abs=1e-12)
        assert walled.phi[-1] == 3.0


class TestStepping:

    def test_stable_dt_scales_with_spacing_squared(self, half_angle):
        coarse = RadialConfig(LENS, half_angle, 32)
        fine = RadialConfig(LENS, half_angle, 64)
        dt_coarse = stable_dt(apply_bcs(smooth_lens(coarse.grid), coarse), coarse)
        dt_fine = stable_dt(apply_bcs(smooth_lens(fine.grid), fine), fine)
        assert 0 < dt_fine < dt_coarse
        assert dt_coarse / dt_fine == pytest.approx(4.0, rel=0.1)
        assert dt_coarse <= 0.25 * coarse.grid.spacing ** 2

    def test_step_keeps_boundary_conditions(self, lens_seed, half_angle):
        config = RadialConfig(LENS, half_angle, lens_seed.grid.n_nodes)
        state = lens_seed
        for _ in range(5):
            state = step(state, config)
        assert state.t > 0
        assert abs(state.u[-1]) < 1e-14
        assert angle_residual(state, half_angle) < 1e-12

    def test_lens_shrinks(self, lens_seed, half_angle):
        config = RadialConfig(LENS, half_angle, lens_seed.grid.n_nodes)
        state = lens_seed
        for _ in range(20):
            state = step(state, config)
        assert state.radius < lens_seed.radius

    def test_step_underflow(self, lens_seed, half_angle):
        config = RadialConfig(LENS, half_angle, lens_seed.grid.n_nodes)
        with pytest.raises(StepUnderflow):
            advance(lens_seed, config, 1e-16)


def catenoid_run(n_nodes: int):
    angle = ContactAngle(0.5)
    seed, outer = catenoid_seed(angle, n_nodes)
    config = RadialConfig(EXTERIOR, angle, n_nodes, outer, cfl_sigma=0.5, t_end=1.0, record_every=1000)
    return run_loop(RadialDriver(config), seed)


@pytest.mark.slow
class TestCatenoidStationarity:

    def test_drift_and_its_refinement(self):
        coarse = catenoid_run(200)
        fine = catenoid_run(399)
        assert coarse.final_state.t == pytest.approx(1.0)
        drift = catenoid_drift(coarse.final_state)
        assert drift <= 1e-3
        assert drift / catenoid_drift(fine.final_state) >= 3.0


@pytest.mark.slow
def test_planar_run_matches_radial_run(half_angle):
    times = (0.01, 0.02, 0.03, 0.04, 0.05)
    radial_config = RadialConfig(LENS, half_angle, 48, t_end=0.05, snapshot_times=times, record_every=10)
    planar_config = PlanarConfig(half_angle, 48, 96, t_end=0.05, snapshot_times=times, record_every=10)
    seed = radial_seed(lens_profile(half_angle), 48)
    radial_trace = run_loop(RadialDriver(radial_config), seed)
    planar_trace = run_loop(PlanarDriver(planar_config), radial_embedding(seed, 96))

    def at(trace, t):
        return next(s.state() for s in trace.snapshots if s.t == pytest.approx(t))

    tolerance = 5 * radial_config.grid.spacing ** 2
    theta = np.linspace(0.0, 2 * np.pi, 7, endpoint=False)
    for t in times:
        radial_state, planar_state = at(radial_trace, t), at(planar_trace, t)
        assert radial_state.radius > 0.5 * seed.radius
        rho = np.linspace(0.0, 0.9 * min(radial_state.radius, planar_state.radius), 12)
        points = (rho[:, None, None] * np.stack((np.cos(theta), np.sin(theta)), axis=-1)[None]).reshape(-1, 2)
        gap = np.abs(graph_sampler(radial_state)(points) - graph_sampler(planar_state)(points)).max()
        assert gap <= tolerance, f"t={t}: {gap:.3e}"
