"""
Command-line interface.

Subcommands:

* ``run``: execute a scenario (bundled name or path) and write its artifacts
* ``check``: evaluate an experiment's assertions against a series dump
* ``export``: write selected series of a dump to CSV
* ``plot``: render one panel of a dump to SVG
* ``scenarios``: list bundled scenarios and charts

Exit codes: 0 on success, 1 when assertions fail, 2 on usage, parse or file errors.
"""

from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional

import typer
from pydantic import ValidationError

from .checks import CHECKS
from .config import parse_override_items
from .errors import MissingSeries, ParseError, SchemaError
from .export import PanelSpec, export_csv, labeled_events, panel_frames, render_panel_svg
from .loaders import bundled_names, load_scenario
from .runner import run as run_scenario
from .tsdb import load_dump

app = typer.Typer(help="Simulated MEC-enabled 5G testbed with end-to-end monitoring.", no_args_is_help=True)

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_USAGE = 2


class RunMode(str, Enum):
    fast = "fast"
    serve = "serve"


def _fail(message: str, code: int = EXIT_USAGE) -> typer.Exit:
    typer.echo(f"error: {message}", err=True)
    return typer.Exit(code)


@app.callback()
def main(
    log_level: str = typer.Option("WARNING", "--log-level", help="Root log level (DEBUG, INFO, WARNING, ERROR)"),
) -> None:
    level = logging.getLevelName(log_level.upper())
    if not isinstance(level, int):
        raise _fail(f"unknown log level '{log_level}'")
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


@app.command()
def run(
    scenario: str = typer.Option(..., "--scenario", "-s", help="Bundled scenario name or path to a JSON/YAML file"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    mode: RunMode = typer.Option(RunMode.fast, "--mode", help="fast or serve"),
    out: Path = typer.Option(Path("out"), "--out", envvar="SIM_OUT_DIR", help="Output directory"),
    override: Optional[List[str]] = typer.Option(None, "--override", "-o", help="Config override key=value"),
) -> None:
    """Run a scenario and write the series dump, CSV, panels and report."""
    try:
        parsed = load_scenario(scenario)
        overrides = parse_override_items(override or [])
        report = run_scenario(parsed, seed=seed, mode=mode.value, out_dir=out, overrides=overrides)
    except ValidationError as exc:
        raise _fail(f"invalid override: {exc.errors()[0]['msg']}") from None
    except (OSError, SchemaError, ValueError, KeyError) as exc:
        raise _fail(str(exc)) from None

    for assertion in report.assertions:
        status = "PASS" if assertion.passed else "FAIL"
        typer.echo(f"{status} {assertion.id}: measured={assertion.measured} bound={assertion.bound}")
    typer.echo(f"artifacts in {out}")
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


@app.command()
def check(
    experiment: int = typer.Option(..., "--experiment", "-e", help="Experiment number (1 or 2)"),
    tsdb: Path = typer.Option(..., "--tsdb", help="Series dump written by run"),
) -> None:
    """Evaluate an experiment's assertions against a dump."""
    if experiment not in CHECKS:
        raise _fail(f"unknown experiment {experiment}, expected one of {sorted(CHECKS)}")
    try:
        dump = load_dump(tsdb)
    except (OSError, ValueError) as exc:
        raise _fail(str(exc)) from None
    try:
        results = CHECKS[experiment](dump)
    except MissingSeries as exc:
        raise _fail(str(exc), EXIT_FAILED) from None
    for result in results:
        typer.echo(f"{'PASS' if result.passed else 'FAIL'} {result.id}: measured={result.measured} bound={result.bound}")
    if not all(r.passed for r in results):
        raise typer.Exit(EXIT_FAILED)


@app.command()
def export(
    tsdb: Path = typer.Option(..., "--tsdb", help="Series dump written by run"),
    csv: Path = typer.Option(..., "--csv", help="CSV file to write"),
    series: Optional[List[str]] = typer.Option(None, "--series", help='Selector such as node_cpu_utilization_ratio{node="core"}'),
) -> None:
    """Export series of a dump to CSV."""
    try:
        rows = export_csv(load_dump(tsdb), csv, series or None)
    except (OSError, ValueError) as exc:
        raise _fail(str(exc)) from None
    typer.echo(f"{rows} rows written to {csv}")


@app.command()
def plot(
    tsdb: Path = typer.Option(..., "--tsdb", help="Series dump written by run"),
    panel: str = typer.Option(..., "--panel", help="Selector of the series to draw"),
    out: Path = typer.Option(..., "--out", help="SVG file to write"),
    title: Optional[str] = typer.Option(None, "--title", help="Panel title (defaults to the selector)"),
    rate: bool = typer.Option(False, "--rate", help="Plot counter rates in bits per second"),
) -> None:
    """Render one panel of a dump to SVG."""
    spec = PanelSpec(title or panel, panel, "rate" if rate else "value")
    try:
        dump = load_dump(tsdb)
        render_panel_svg(panel_frames(dump, spec), spec.title, out, labeled_events(dump))
    except (OSError, ParseError, ValueError) as exc:
        raise _fail(str(exc)) from None
    typer.echo(f"panel written to {out}")


@app.command()
def scenarios() -> None:
    """List bundled scenarios and charts."""
    for name in bundled_names("scenarios"):
        typer.echo(f"scenario {name}")
    for name in bundled_names("charts"):
        typer.echo(f"chart {name}")


if __name__ == "__main__":
    app()
