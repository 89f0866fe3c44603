import pytest
from click.testing import CliRunner

from main import cli
from src.contact_mcm.run_config import parse_run_config, preset


@pytest.fixture
def runner(prefect_harness):
    return CliRunner()


def test_missing_config(runner, tmp_path):
    result = runner.invoke(cli, ["run", str(tmp_path / "absent.ini"), "--out", str(tmp_path / "run")])
    assert result.exit_code == 2
    assert "error(config)" in result.stderr


def test_config_and_preset_together(runner, tmp_path):
    config = tmp_path / "lens.ini"
    config.write_text(preset("lens-extinct").to_ini())
    result = runner.invoke(cli, ["run", str(config), "--preset", "catenoid"])
    assert result.exit_code == 2


def test_invalid_config(runner, tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[problem]\nbeta = 1.5\n")
    result = runner.invoke(cli, ["run", str(config), "--out", str(tmp_path / "run")])
    assert result.exit_code == 2
    assert "0 < beta < 1" in result.stderr


def test_verify_missing_run(runner, tmp_path):
    result = runner.invoke(cli, ["verify", str(tmp_path / "nowhere")])
    assert result.exit_code == 4


def test_converge_needs_two_levels(runner, tmp_path):
    config = tmp_path / "lens.ini"
    config.write_text(preset("lens-extinct").to_ini())
    result = runner.invoke(cli, ["converge", str(config), "--levels", "1"])
    assert result.exit_code == 2


def test_preset_prints_config(runner):
    result = runner.invoke(cli, ["preset", "catenoid"])
    assert result.exit_code == 0
    assert parse_run_config(result.stdout) == preset("catenoid")


def test_preset_to_file(runner, tmp_path):
    out = tmp_path / "catenoid.ini"
    result = runner.invoke(cli, ["preset", "catenoid", "--out", str(out)])
    assert result.exit_code == 0
    assert parse_run_config(out.read_text()) == preset("catenoid")


def test_unknown_preset(runner):
    result = runner.invoke(cli, ["preset", "droplet"])
    assert result.exit_code == 2
