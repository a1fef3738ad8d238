"""Main CLI definition for chainmi."""

import math
from pathlib import Path
from typing import Any, List, Optional

import typer
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from chainmi import __version__
from chainmi.cli.experiments import (
    Outcome,
    epsilons_from_floats,
    parse_epsilons,
    run_bounds,
    run_example1,
    run_simulate,
)
from chainmi.core.config import RunConfig, load_run_config
from chainmi.core.exceptions import ChainMIError
from chainmi.core.logger import set_verbose

console = Console()

EXIT_CONFIG = 1
EXIT_VALIDATION = 2

DEFAULT_EPSILONS = "1/20,1/30,1/40,1/50,1/100,1/200,1/400"

app = typer.Typer(help="Chained mutual information and Dudley bounds with Monte-Carlo checks.", no_args_is_help=True)


def version_callback(value: bool) -> None:
    if value:
        print(f"chainmi {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", help="Log service calls to stderr"),
    version: bool = typer.Option(
        None,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show program version",
    ),
) -> None:
    set_verbose(verbose)


def _format(value: Any) -> str:
    if isinstance(value, float):
        return "∞" if math.isinf(value) else f"{value:.4f}"
    if value is None:
        return ""
    return str(value)


def _fail(message: str) -> None:
    console.print(f"[red]Error:[/red] {escape(message)}")
    raise typer.Exit(EXIT_CONFIG)


def _resolve(
    config_path: Optional[Path],
    seed: Optional[int],
    samples: Optional[int],
    tol: Optional[float],
    kmax: Optional[int],
    out: Optional[Path],
    fmt: Optional[str],
) -> RunConfig:
    base = load_run_config(config_path) if config_path is not None else RunConfig()
    return base.with_overrides(seed=seed, samples=samples, tol=tol, kmax=kmax, out=out, format=fmt)


def _report_checks(outcome: Outcome) -> None:
    failed = [check for check in outcome.checks if not check.passed]
    for check in failed:
        console.print(f"[red]✗[/red] {escape(check.name)}: {escape(check.detail)}")
    for path in outcome.files:
        console.print(f"[dim]wrote {path}[/dim]")
    if failed:
        raise typer.Exit(EXIT_VALIDATION)
    if outcome.checks:
        console.print(f"[green]✓[/green] {len(outcome.checks)} checks passed")


SeedOption = typer.Option(None, "--seed", min=0, help="Root seed of all randomness")
SamplesOption = typer.Option(None, "--samples", min=100, help="Monte-Carlo sample count")
TolOption = typer.Option(None, "--tol", help="Series tail tolerance")
KmaxOption = typer.Option(None, "--kmax", help="Deepest explicitly summed level")
OutOption = typer.Option(None, "--out", help="Output directory")
FormatOption = typer.Option(None, "--format", help="Report format (json/csv)")


@app.command()
def example1(
    epsilons: Optional[str] = typer.Option(None, "--epsilons", help="Comma-separated epsilons, fractions allowed"),
    config_path: Optional[Path] = typer.Option(None, "--config", exists=True, dir_okay=False, help="JSON run configuration"),
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    tol: Optional[float] = TolOption,
    kmax: Optional[int] = KmaxOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
    no_mc: bool = typer.Option(False, "--no-mc", help="Skip the Monte-Carlo column"),
) -> None:
    """Reproduce the noisy circle argmax table and check its golden values."""
    try:
        config = _resolve(config_path, seed, samples, tol, kmax, out, fmt)
        block = config.example1
        if epsilons is not None:
            chosen = parse_epsilons(epsilons)
        elif block is not None:
            chosen = epsilons_from_floats(block.epsilons)
        else:
            chosen = parse_epsilons(DEFAULT_EPSILONS)
        if block is not None and not block.mc:
            no_mc = True
        outcome = run_example1(config, chosen, monte_carlo=not no_mc)
    except ChainMIError as e:
        _fail(str(e))

    table = Table(title="E[X_W] and its upper bounds")
    table.add_column("")
    for row in outcome.rows:
        table.add_column(f"ε = {row['epsilon']}", justify="right")
    labels = [
        ("MI bound", "mi_bound"),
        ("Chaining bound", "chaining_bound"),
        ("CMI bound", "cmi_bound"),
        ("E[X_W]", "true_bias"),
    ]
    if not no_mc:
        labels.append(("MC E[X_W]", "mc_bias"))
    for title, key in labels:
        cells: List[str] = []
        for row in outcome.rows:
            cell = _format(row[key])
            if key == "mc_bias":
                cell += f" ± {row['mc_stderr']:.4f}"
            cells.append(cell)
        table.add_row(title, *cells)
    console.print(table)
    _report_checks(outcome)


@app.command()
def bounds(
    config_path: Path = typer.Argument(..., exists=True, dir_okay=False, help="JSON run configuration"),
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    tol: Optional[float] = TolOption,
    kmax: Optional[int] = KmaxOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
) -> None:
    """Evaluate the bounds requested in CONFIG_PATH and write one report each."""
    try:
        config = _resolve(config_path, seed, samples, tol, kmax, out, fmt)
        outcome = run_bounds(config)
    except ChainMIError as e:
        _fail(str(e))

    table = Table(title="Bounds")
    table.add_column("Bound")
    table.add_column("Value", justify="right")
    table.add_column("Stderr", justify="right")
    for row in outcome.rows:
        table.add_row(row["bound"], _format(row["value"]), _format(row.get("stderr")))
    console.print(table)
    _report_checks(outcome)


@app.command()
def simulate(
    config_path: Path = typer.Argument(..., exists=True, dir_okay=False, help="JSON run configuration"),
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    tol: Optional[float] = TolOption,
    kmax: Optional[int] = KmaxOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
) -> None:
    """Simulate the process and selector in CONFIG_PATH and compare with the bounds."""
    try:
        config = _resolve(config_path, seed, samples, tol, kmax, out, fmt)
        outcome, estimate = run_simulate(config)
    except ChainMIError as e:
        _fail(str(e))

    console.print(f"estimate: {estimate.estimate:.6f} ± {estimate.stderr:.6f} ({estimate.samples} samples)")
    table = Table(title="Comparisons")
    table.add_column("Bound")
    table.add_column("Value", justify="right")
    table.add_column("Threshold", justify="right")
    table.add_column("Pass")
    for row in outcome.rows:
        table.add_row(
            row["comparison"],
            _format(row["bound"]),
            _format(row["threshold"]),
            "[green]yes[/green]" if row["pass"] else "[red]no[/red]",
        )
    console.print(table)
    _report_checks(outcome)


if __name__ == "__main__":
    app()
