"""Command-line front end.

One subcommand per task plus `selftest`. Every task subcommand reads a
job config, runs that task over the configured sweep, and writes the
task's data file and the run manifest into the output directory.

Exit codes: 0 success, 1 partial failures present (some sweep points
recorded errors, or a failed selftest), 2 config error, 3 internal error.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import parse_config
from .errors import NHFloqError, ParseError, SchemaError
from .runner import run_job
from .selftest import run_selftest

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


def _common(fn):
    fn = click.option(
        "--config", "config_path", required=True,
        type=click.Path(), help="Job config file (INI grammar).",
    )(fn)
    fn = click.option(
        "--out", "out_dir", default=None, type=click.Path(),
        help="Output directory (overrides [output] dir).",
    )(fn)
    fn = click.option(
        "--workers", default=1, show_default=True, type=click.IntRange(min=1),
        help="Worker pool size for sweep points.",
    )(fn)
    fn = click.option(
        "--format", "fmt", default=None, type=click.Choice(["csv", "json"]),
        help="Output format (overrides [output] format).",
    )(fn)
    return fn


def _execute(task: str, config_path: str, out_dir, workers: int, fmt):
    try:
        text = Path(config_path).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        cfg = parse_config(text)
    except (ParseError, SchemaError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        result = run_job(cfg, workers=workers, out_dir=out_dir, fmt=fmt, tasks=[task])
    except (ParseError, SchemaError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except NHFloqError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)
    except Exception as exc:
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)
    for oc in result.outcomes:
        note = f" ({oc.failures}/{oc.points} points failed)" if oc.failures else ""
        click.echo(f"{oc.task}: {oc.rows} rows -> {oc.path}{note}")
    click.echo(f"manifest: {result.manifest_path}")
    sys.exit(EXIT_PARTIAL if result.partial else EXIT_OK)


@click.group()
@click.version_option(package_name="nhfloq")
def main():
    """Floquet spectra, invariants and localization diagnostics for
    periodically driven non-Hermitian lattice models."""


@main.command()
@_common
def spectrum(config_path, out_dir, workers, fmt):
    """Quasienergy spectrum at every sweep point."""
    _execute("spectrum", config_path, out_dir, workers, fmt)


@main.command()
@_common
def invariants(config_path, out_dir, workers, fmt):
    """Topological invariants, gap minima and boundary-mode counts."""
    _execute("invariants", config_path, out_dir, workers, fmt)


@main.command()
@_common
def dynamics(config_path, out_dir, workers, fmt):
    """Dynamical probes: mean chiral displacement, dynamic winding,
    wavepacket transport."""
    _execute("dynamics", config_path, out_dir, workers, fmt)


@main.command()
@_common
def localization(config_path, out_dir, workers, fmt):
    """Spectral and participation diagnostics with a phase label."""
    _execute("localization", config_path, out_dir, workers, fmt)


@main.command(name="phase-diagram")
@_common
def phase_diagram(config_path, out_dir, workers, fmt):
    """Compact per-point summary (phase label or winding pair) over a
    one- or two-axis sweep."""
    _execute("phase_diagram", config_path, out_dir, workers, fmt)


@main.command()
def selftest():
    """Run the built-in example checks (finishes in under a minute)."""
    ok = run_selftest(echo=click.echo)
    sys.exit(EXIT_OK if ok else EXIT_PARTIAL)


if __name__ == "__main__":
    main()
