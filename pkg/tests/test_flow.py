import dataclasses
import math

import pytest

from src.contact_mcm.diagnose.bounds import bounds_monitor, extinction_bound
from src.contact_mcm.diagnose.monitor import catenoid_drift
from src.contact_mcm.errors import ConfigError
from src.contact_mcm.flow import MIN_ORDERS, converge_flow, plot_flow, run_flow, verify_flow
from src.contact_mcm.run_config import parse_run_config, preset
from src.contact_mcm.storage import ORDERS_FILE, SERIES_FILE, TRACE_FILE, read_verify
from src.contact_mcm.trace import EXTINCTION, T_END

SMALL_LENS = """
[problem]
solver = radial
kind = lens
beta = 0.5

[grid]
n_nodes = 16

[time]
t_end = 0.002
snapshot_times = 0.001
"""

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def small_run(prefect_harness, tmp_path_factory):
    directory = tmp_path_factory.mktemp("lens")
    trace = run_flow(parse_run_config(SMALL_LENS), directory)
    return directory, trace


def test_run_writes_the_directory(small_run):
    directory, trace = small_run
    assert trace.exit_reason == T_END
    assert (directory / TRACE_FILE).is_file()
    assert (directory / SERIES_FILE).is_file()
    assert len(list(directory.glob("snap_*.json"))) == len(trace.snapshots) == 3


def test_verify_writes_reports(small_run):
    directory, _ = small_run
    result = verify_flow(directory)
    lines = read_verify(directory)
    assert len(lines) == len(result.reports)
    assert {line["kind"] for line in lines} <= {"residual", "bound"}
    assert "trace_identity" not in result.failures


def test_plot_with_mesh(small_run):
    directory, trace = small_run
    paths = plot_flow(directory, triple=True, mesh=True, width=300)
    assert sum(p.suffix == ".svg" for p in paths) == len(trace.snapshots)
    meshes = [p for p in paths if p.suffix == ".obj"]
    assert len(meshes) == len(trace.snapshots)
    assert meshes[0].read_text().startswith("mcm-tj v1")


def test_converge_needs_two_levels(prefect_harness, tmp_path):
    with pytest.raises(ConfigError):
        converge_flow(parse_run_config(SMALL_LENS), 1, tmp_path)


def test_converge_writes_orders(prefect_harness, tmp_path):
    reports = converge_flow(parse_run_config(SMALL_LENS), 2, tmp_path)
    assert (tmp_path / ORDERS_FILE).is_file()
    assert (tmp_path / "level_0" / TRACE_FILE).is_file()
    assert (tmp_path / "level_1" / TRACE_FILE).is_file()
    assert {r.identity for r in reports} >= {"h_split", "evolution_H"}


def test_series_is_reproducible(prefect_harness, tmp_path):
    config = parse_run_config(SMALL_LENS)
    run_flow(config, tmp_path / "first")
    run_flow(config, tmp_path / "second")
    first = (tmp_path / "first" / SERIES_FILE).read_bytes()
    assert first == (tmp_path / "second" / SERIES_FILE).read_bytes()


class TestCatenoidPreset:

    def test_stays_on_the_catenoid(self, prefect_harness, tmp_path):
        trace = run_flow(preset("catenoid"), tmp_path)
        assert trace.exit_reason == T_END
        assert catenoid_drift(trace.snapshots[-1].state()) <= 1e-3
        result = verify_flow(tmp_path)
        assert "catenoid_drift" not in result.failures


@pytest.fixture(scope="module")
def extinct_run(prefect_harness, tmp_path_factory):
    directory = tmp_path_factory.mktemp("lens-extinct")
    return directory, run_flow(preset("lens-extinct"), directory)


class TestLensExtinctPreset:

    def test_reaches_extinction(self, extinct_run):
        _, trace = extinct_run
        assert trace.exit_reason == EXTINCTION
        assert trace.final_state.radius < 1e-3 * trace.initial.radius

    def test_monotone_bounds(self, extinct_run):
        _, trace = extinct_run
        report = bounds_monitor(trace)
        initial_v = trace.initial.sup_v
        assert report["gradient"].passed
        assert report["gradient"].value <= max(initial_v, 2.0) * 1.001
        assert report["concavity"].value <= 1e-6
        assert report["volume"].passed
        assert report["support_positive"].passed
        assert report["support_ceiling"].passed
        assert report["support_shrink"].passed

    def test_extinction_time(self, extinct_run):
        _, trace = extinct_run
        bound = extinction_bound(trace)
        assert bound.interior_t_star == pytest.approx(1.0 / trace.initial.H_max ** 2)
        assert bound.interior_passed
        assert 0 < bound.t_measured <= bound.interior_t_star

    def test_verify_keeps_the_bounds(self, extinct_run):
        directory, _ = extinct_run
        result = verify_flow(directory)
        names = {line.get("bound", line.get("identity")) for line in read_verify(directory)}
        assert {"gradient", "concavity", "extinction_time_interior", "support_shrink"} <= names
        violated = {"gradient", "concavity", "volume", "support_positive", "support_ceiling", "support_shrink",
                    "extinction_time_interior"} & set(result.failures)
        assert not violated


def test_lens_prop125_keeps_mean_curvature_below_its_start(prefect_harness, tmp_path):
    trace = run_flow(preset("lens-prop125"), tmp_path)
    assert trace.initial.sup_v <= math.sqrt(3.0)
    report = bounds_monitor(trace)
    assert report["mean_curvature"].passed
    assert report["mean_curvature"].value <= trace.initial.H_max + 1e-3


def test_lens_orders_over_three_levels(prefect_harness, tmp_path):
    config = preset("lens-extinct")
    config = dataclasses.replace(config, time=dataclasses.replace(config.time, t_end=0.06))
    reports = converge_flow(config, 3, tmp_path)
    found = {r.identity: r for r in reports}
    assert set(found) >= {"normal_derivative_H", "normal_derivative_h_tt", "normal_derivative_h_nn",
                          "normal_derivative_h_norm2", "support_boundary_value", "support_normal_derivative",
                          "evolution_v", "evolution_H", "evolution_h_norm2", "boundary_velocity"}
    for name, report in found.items():
        assert report.passed, f"{name}: order {report.order!r} below {MIN_ORDERS[name]}"
