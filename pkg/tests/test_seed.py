import math

import numpy as np
import pytest

from src.contact_mcm.errors import DomainError, NotDiffeo
from src.contact_mcm.geometry import ContactAngle
from src.contact_mcm.grid import PolarGrid
from src.contact_mcm.planar import PlanarConfig, boundary_residuals
from src.contact_mcm.radial import angle_residual
from src.contact_mcm.seed import (MESH_HEADER, CapProfile, DomainDescriptor, HarmonicExtension,
                                  ParaboloidProfile, SeedProfile, build_diffeo, catenoid_seed,
                                  compatibility_residual, extend_boundary_function, planar_seed,
                                  profile_from_family, radial_seed, reflect_triple_junction, required_jet,
                                  smoothstep, verify_jet)


@pytest.mark.parametrize("profile_cls", [ParaboloidProfile, CapProfile])
@pytest.mark.parametrize("beta", [0.3, 0.5, 0.9])
def test_profile_meets_plane_at_contact_angle(profile_cls, beta):
    angle = ContactAngle(beta)
    profile = profile_cls(angle, R0=1.5)
    assert profile.value(1.5) == pytest.approx(0.0, abs=1e-14)
    assert profile.slope(1.5) == pytest.approx(-angle.slope, rel=1e-12)
    assert profile.value(0.0) > 0


def test_cap_has_constant_mean_curvature():
    angle = ContactAngle(0.6)
    cap = CapProfile(angle, R0=2.0)
    rho = np.linspace(0.0, 2.0, 9)
    np.testing.assert_allclose(cap.mean_curvature(rho), -2.0 / cap.sphere_radius, rtol=1e-12)


def test_profile_base_is_abstract():
    with pytest.raises(TypeError):
        SeedProfile(ContactAngle(0.5))


def test_unknown_family():
    with pytest.raises(DomainError):
        profile_from_family("torus", ContactAngle(0.5))


def test_required_jet():
    angle = ContactAngle(0.5)
    assert float(required_jet(-1.0, angle)) == pytest.approx(1.0 / (0.25 * math.sqrt(0.75)))


class TestDomain:

    def test_cutoff_levels(self):
        domain = DomainDescriptor(0.05, 0.2)
        assert domain.cutoff(0.0) == 1.0
        assert domain.cutoff(0.05) == 1.0
        assert domain.cutoff(0.2) == 0.0
        assert domain.cutoff(0.5) == 0.0

    def test_invalid_cutoff(self):
        with pytest.raises(DomainError):
            DomainDescriptor(0.3, 0.2)

    def test_sampled_fields(self):
        grid = PolarGrid(12, 16)
        rho, normal, zeta = DomainDescriptor(0.05, 0.2).sample(grid)
        np.testing.assert_allclose(rho.values, 1.0 - grid.mesh[0])
        np.testing.assert_allclose(np.linalg.norm(normal.values, axis=-1), 1.0)
        assert np.all((zeta.values >= 0.0) & (zeta.values <= 1.0))
        assert zeta.values[-1].min() == 1.0

    def test_smoothstep_is_flat_at_the_ends(self):
        s = np.array([0.0, 1.0])
        np.testing.assert_allclose(smoothstep(s), [0.0, 1.0])
        np.testing.assert_allclose(smoothstep(s, 1), 0.0)
        np.testing.assert_allclose(smoothstep(s, 2), 0.0)


class TestDiffeo:

    def test_harmonic_extension_reproduces_boundary(self):
        theta = 2 * np.pi * np.arange(32) / 32
        h = 1.0 + 0.3 * np.cos(2 * theta) - 0.1 * np.sin(3 * theta)
        ext = HarmonicExtension.from_boundary(h)
        np.testing.assert_allclose(ext.value(np.array([1.0]))[0], h, atol=1e-13)
        # r^m e^{i m theta}: the centre sees only the mean
        np.testing.assert_allclose(ext.value(np.array([0.0]))[0], 1.0, atol=1e-13)

    def test_extension_is_bounded_by_the_boundary_data(self):
        theta = 2 * np.pi * np.arange(64) / 64
        h = np.cos(3 * theta) + 0.5 * np.sin(theta)
        r = np.linspace(0.0, 1.0, 11)
        g = extend_boundary_function(h, r)
        assert np.abs(g).max() <= np.abs(h).max() + 1e-12
        np.testing.assert_allclose(g[5], 0.5 ** 3 * np.cos(3 * theta) + 0.25 * np.sin(theta), atol=1e-13)
        np.testing.assert_allclose(extend_boundary_function(np.full(16, 2.5), r), 2.5, atol=1e-13)

    def test_jet_conditions_converge(self):
        errors = []
        for n_r in (32, 64):
            grid = PolarGrid(n_r, 2 * n_r)
            h = 2.0 + 0.5 * np.cos(2 * grid.theta)
            diffeo = build_diffeo(h, grid)
            report = verify_jet(diffeo.stacked(), h, grid)
            assert report.boundary_error < 1e-12
            assert report.min_jacobian > 0
            errors.append((report.differential_error, report.jet_error))
        assert errors[1][0] < errors[0][0]
        assert errors[1][1] < errors[0][1]

    def test_wrong_jet_factor_breaks_the_jet(self):
        grid = PolarGrid(64, 64)
        h = np.full(64, 2.0)
        right = verify_jet(build_diffeo(h, grid).stacked(), h, grid)
        wrong = verify_jet(build_diffeo(h, grid, jet_factor=1.0).stacked(), h, grid)
        assert wrong.jet_error > 10 * right.jet_error

    def test_folded_map(self):
        grid = PolarGrid(32, 32)
        with pytest.raises(NotDiffeo):
            build_diffeo(np.full(32, 400.0), grid)


class TestSeeds:

    def test_radial_seed_satisfies_boundary_conditions(self, half_angle):
        seed = radial_seed(ParaboloidProfile(half_angle), 48)
        assert abs(seed.u[-1]) < 1e-14
        assert angle_residual(seed, half_angle) < 1e-10

    def test_compatible_seed_has_smaller_contact_rate(self, half_angle):
        profile = ParaboloidProfile(half_angle)
        compatible = abs(compatibility_residual(radial_seed(profile, 128, compatible=True))).max()
        plain = abs(compatibility_residual(radial_seed(profile, 128, compatible=False))).max()
        assert compatible < 0.1 * plain

    def test_catenoid_seed_needs_half_angle(self):
        with pytest.raises(DomainError):
            catenoid_seed(ContactAngle(0.4), 41)

    @pytest.mark.slow
    def test_planar_seed_projects_onto_boundary_conditions(self, half_angle):
        config = PlanarConfig(half_angle, 16, 32)
        seed = planar_seed(ParaboloidProfile(half_angle), config)
        assert np.abs(boundary_residuals(seed, half_angle)).max() <= config.newton_tol


class TestTripleJunction:

    def test_half_angle_gives_equal_angles(self, lens_seed):
        junction = reflect_triple_junction(lens_seed, n_theta=16)
        for name, angles in junction.junction_angles().items():
            np.testing.assert_allclose(angles, 120.0, atol=1e-6, err_msg=name)

    def test_mesh_text(self, lens_seed):
        junction = reflect_triple_junction(lens_seed, n_theta=16)
        lines = junction.to_text().splitlines()
        assert lines[0] == MESH_HEADER
        vertices = [line for line in lines if line.startswith("v ")]
        faces = [line for line in lines if line.startswith("f ")]
        assert len(vertices) == len(junction.vertices)
        indices = np.array([[int(i) for i in f.split()[1:]] for f in faces])
        assert indices.min() == 1
        assert indices.max() == len(vertices)

    def test_sheets_share_the_junction(self, lens_seed):
        junction = reflect_triple_junction(lens_seed, n_theta=16)
        ring = set(junction.junction.tolist())
        for name in ("upper", "lower", "plane"):
            assert ring <= set(junction.faces[name].ravel().tolist()), name

    def test_exterior_states_are_rejected(self, catenoid):
        state, _ = catenoid
        with pytest.raises(DomainError):
            reflect_triple_junction(state)
