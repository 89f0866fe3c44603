"""
Command line for the contact-angle mean curvature motion simulator.

Exit codes: 0 success, 2 configuration, 3 solver, 4 I/O, 5 failed verification.
"""
import functools
import logging
from pathlib import Path
from typing import Optional

import click

from src.config import config

VERIFY_FAILED = 5


def reports_errors(func):
    """Turn library errors into a message on stderr and the error's exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwds):
        from src.contact_mcm.errors import ContactMcmError
        try:
            return func(*args, **kwds)
        except ContactMcmError as e:
            click.echo(f"error({e.code}): {e}", err=True)
            raise SystemExit(e.exit_code)
    return wrapper


@click.group
@click.option("--log-level", default=None, help="Overrides MCM_LOG_LEVEL")
def cli(log_level: Optional[str]):
    logging.basicConfig(level=(log_level or config.log_level).upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


###################################################################################################
# Simulation
###################################################################################################

@cli.command
@click.argument("config_path", required=False, type=click.Path(dir_okay=False, path_type=Path))
@click.option("--preset", "preset_name", default=None, help="Run a named preset instead of a file")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False, path_type=Path),
              help="Run directory, default MCM_OUTPUT_ROOT/<name>_<timestamp>")
@reports_errors
def run(config_path: Optional[Path], preset_name: Optional[str], out_dir: Optional[Path]):
    """Simulate CONFIG_PATH and write the run directory."""
    from src.contact_mcm.errors import ConfigError
    from src.contact_mcm.flow import run_flow
    from src.contact_mcm.run_config import load_run_config, preset
    from src.utils import timestamped

    if (config_path is None) == (preset_name is None):
        raise ConfigError("give either a config file or --preset")
    run_config = preset(preset_name) if preset_name else load_run_config(config_path)
    name = preset_name or config_path.stem
    directory = out_dir or Path(config.output_root) / timestamped(name)
    trace = run_flow(run_config, directory)
    click.echo(f"{directory} {trace.exit_reason}")
    if trace.failed:
        click.echo(f"solver stopped: {trace.error_message}", err=True)
        raise SystemExit(3)


@cli.command
@click.argument("run_dir", type=click.Path(path_type=Path))
@reports_errors
def verify(run_dir: Path):
    """Check every identity and bound on a stored run; writes verify.jsonl."""
    from src.contact_mcm.flow import verify_flow

    result = verify_flow(run_dir)
    applicable = [r for r in result.reports if r.passed is not None]
    click.echo(f"{len(applicable) - sum(result.failures.values())}/{len(applicable)} checks passed")
    if not result.passed:
        click.echo(f"failed: {result.first_failure} (" + ", ".join(result.failures) + ")", err=True)
        raise SystemExit(VERIFY_FAILED)


@cli.command
@click.argument("config_path", type=click.Path(dir_okay=False, path_type=Path))
@click.option("--levels", default=3, show_default=True, type=int)
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False, path_type=Path))
@reports_errors
def converge(config_path: Path, levels: int, out_dir: Optional[Path]):
    """Refinement sweep of CONFIG_PATH; writes orders.csv."""
    from src.contact_mcm.errors import ConfigError
    from src.contact_mcm.flow import converge_flow
    from src.contact_mcm.run_config import load_run_config
    from src.utils import timestamped

    if levels < 2:
        raise ConfigError(f"levels must satisfy levels >= 2, got {levels}")
    run_config = load_run_config(config_path)
    directory = out_dir or Path(config.output_root) / timestamped(f"{config_path.stem}_converge")
    reports = converge_flow(run_config, levels, directory)
    for report in reports:
        click.echo(f"{report.identity}: order {report.order!r} {'ok' if report.passed else 'FAILED'}")
    if not all(r.passed for r in reports):
        raise SystemExit(VERIFY_FAILED)


@cli.command
@click.argument("run_dir", type=click.Path(path_type=Path))
@click.option("--triple", is_flag=True, help="Draw the reflected profile and the baseline")
@click.option("--mesh", is_flag=True, help="Also export the triple-junction mesh of every snapshot")
@click.option("--width", default=None, type=int, help="Overrides MCM_SVG_WIDTH")
@reports_errors
def plot(run_dir: Path, triple: bool, mesh: bool, width: Optional[int]):
    """SVG profile per snapshot of RUN_DIR."""
    from src.contact_mcm.flow import plot_flow

    for path in plot_flow(run_dir, triple=triple, mesh=mesh, width=width):
        click.echo(str(path))


###################################################################################################
# Presets
###################################################################################################

@cli.command(name="preset")
@click.argument("name")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False, path_type=Path))
@reports_errors
def preset_command(name: str, out_path: Optional[Path]):
    """Print (or write) the configuration of a named preset."""
    from src.contact_mcm.run_config import preset
    from src.contact_mcm.storage import write_text

    text = preset(name).to_ini()
    if out_path is None:
        click.echo(text)
    else:
        write_text(out_path, text)


if __name__ == '__main__':
    cli()
