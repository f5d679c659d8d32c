"""CLI entry point for qndlink.

Provides the top-level ``qndlink`` command group and its sub-commands:
run, sweep, compare, and validate.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from qndlink import __version__
from qndlink.protocols import ProtocolKind, RunMode

console = Console()
err_console = Console(stderr=True)

QUADRATURES = ("x_A", "p_A", "x_B", "p_B")


class FloatList(click.ParamType):
    """Comma-separated list of floats, e.g. ``0.5,1,2``."""

    name = "floats"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> list[float]:
        if isinstance(value, list):
            return value
        items = [item.strip() for item in str(value).split(",") if item.strip()]
        try:
            return [float(item) for item in items]
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


class KindList(click.ParamType):
    """Comma-separated protocol names."""

    name = "protocols"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> list[str]:
        if isinstance(value, list):
            return value
        kinds = [item.strip() for item in str(value).split(",") if item.strip()]
        valid = {k.value for k in ProtocolKind}
        unknown = [k for k in kinds if k not in valid]
        if unknown:
            self.fail(f"Unknown protocol(s): {', '.join(unknown)} (choose from {', '.join(sorted(valid))})", param, ctx)
        return kinds


def _configure_logging(verbose: bool) -> None:
    logger = logging.getLogger("qndlink")
    logger.handlers[:] = [RichHandler(console=err_console, show_path=False)]
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)


def _fail(message: str) -> None:
    """Print error and exit with the usage/config code."""
    console.print(f"[red]✗[/red] {escape(message)}")
    raise SystemExit(2)


def _options(config: Optional[Path], flags: dict[str, Any]) -> dict[str, Any]:
    from qndlink.config import load_config_file, merge_options

    file_options = load_config_file(config) if config is not None else {}
    return merge_options(file_options, flags)


def _run_options(func):
    """Options shared by every command that simulates protocols."""
    for decorator in reversed((
        click.option("--idealize-resources/--finite-resources", default=None,
                     help="Drop resource noise, keep only channel-induced noise."),
        click.option("--mode", type=click.Choice([m.value for m in RunMode]), default=None,
                     help="Exact ensemble, or ensemble plus sampled trajectories."),
        click.option("--runs", type=int, default=None, help="Trajectories in trajectory mode."),
        click.option("--seed", type=int, default=None, help="Seed of the trajectory streams."),
        click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
                     help="YAML config file; flags override its values."),
        click.option("--out", type=click.Path(path_type=Path), default=None, help="Write CSV here."),
        click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
                     help="Worker threads."),
    )):
        func = decorator(func)
    return func


def _grid_options(func):
    """Grid flags of sweep and compare; each takes a comma-separated list."""
    for decorator in reversed((
        click.option("--gain", type=FloatList(), default=None, help="Symmetric gains G_A = G_B."),
        click.option("--gain-alice", type=FloatList(), default=None, help="Alice's gains G_A."),
        click.option("--gain-bob", type=FloatList(), default=None, help="Bob's gains G_B."),
        click.option("--squeezing", type=FloatList(), default=None, help="Resource squeezings r."),
        click.option("--transmitivity", type=FloatList(), default=None, help="Channel transmitivities T."),
        click.option("--noise-var", type=FloatList(), default=None, help="Channel noise variances."),
    )):
        func = decorator(func)
    return func


def _shared_flags(**values: Any) -> dict[str, Any]:
    flags = dict(values)
    if flags.get("mode") is not None:
        flags["mode"] = RunMode(flags["mode"])
    return flags


def _write_rows(rows: list, out: Optional[Path]) -> None:
    from qndlink.sweep import write_csv

    if out is None:
        write_csv(rows, click.get_text_stream("stdout"))
        return
    with out.open("w", encoding="utf-8", newline="") as stream:
        write_csv(rows, stream)
    err_console.print(f"[green]✓[/green] Wrote {len(rows)} row(s) to {out}")


# ---------------------------------------------------------------------------
# Root group
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(version=__version__, prog_name="qndlink")
@click.option("--verbose", "-v", is_flag=True, help="Log debug output to stderr.")
def cli(verbose: bool) -> None:
    """qndlink — Gaussian simulation of QND interactions at a distance."""
    _configure_logging(verbose)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

@cli.command()
@click.option("--protocol", type=click.Choice([k.value for k in ProtocolKind]), default=None,
              help="Scheme to simulate.")
@click.option("--gain", type=float, default=None, help="Symmetric gain G_A = G_B.")
@click.option("--gain-alice", type=float, default=None, help="Alice's gain G_A.")
@click.option("--gain-bob", type=float, default=None, help="Bob's gain G_B.")
@click.option("--squeezing", type=float, default=None, help="Resource squeezing r.")
@click.option("--transmitivity", type=float, default=None, help="Channel transmitivity T; omit for no channel.")
@click.option("--noise-var", type=float, default=None, help="Variance of each channel noise operator.")
@_run_options
def run(config_path: Optional[Path], out: Optional[Path], workers: int, **flags: Any) -> None:
    """Simulate one protocol and print its noise report and output covariance."""
    from qndlink.config import protocol_config_from_options
    from qndlink.protocols import run_protocol
    from qndlink.sweep import ComparisonRow

    try:
        config = protocol_config_from_options(_options(config_path, _shared_flags(**flags)))
        result = run_protocol(config, workers=workers)
    except (ValueError, FileNotFoundError) as exc:
        _fail(str(exc))

    row = ComparisonRow.from_result(result)
    summary = Table(title=f"{config.kind.value}  G_A={config.gain_alice:g}  G_B={config.gain_bob:g}  r={config.squeezing:g}")
    summary.add_column("quantity")
    summary.add_column("value", justify="right")
    for name, value in (
        ("added Var(P'_A)", row.var_add_pa),
        ("added Var(X'_B)", row.var_add_xb),
        ("resource part P'_A", row.resource_pa),
        ("resource part X'_B", row.resource_xb),
        ("channel part P'_A", row.channel_pa),
        ("channel part X'_B", row.channel_xb),
        ("metric", row.metric),
        ("Duan value", row.duan_value),
        ("Duan bound", row.duan_bound),
    ):
        summary.add_row(name, f"{value:.10g}")
    console.print(summary)

    covariance = Table(title="output covariance")
    covariance.add_column("")
    for name in QUADRATURES:
        covariance.add_column(name, justify="right")
    for name, values in zip(QUADRATURES, result.output.cov):
        covariance.add_row(name, *(f"{v:.10g}" for v in values))
    console.print(covariance)

    if result.empirical is not None:
        deviation = result.empirical.deviation(result.output.mean, result.output.cov)
        mark = "[green]✓[/green]" if deviation <= 5.0 else "[yellow]![/yellow]"
        console.print(f"{mark} {result.empirical.n_samples} trajectories, worst deviation {deviation:.2f} SE")
    if not result.noise_report.spectators_intact:
        console.print("[yellow]![/yellow] X'_A or P'_B deviates from the ideal QND output")

    if out is not None:
        _write_rows([row], out)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@cli.command()
@click.option("--protocol", type=KindList(), default=None, help="Comma-separated schemes.")
@_grid_options
@_run_options
def sweep(config_path: Optional[Path], out: Optional[Path], workers: int, **flags: Any) -> None:
    """Evaluate a parameter grid and emit one CSV row per grid point."""
    from qndlink.config import sweep_spec_from_options
    from qndlink.sweep import run_sweep

    try:
        spec = sweep_spec_from_options(_options(config_path, _shared_flags(**flags)))
        rows = run_sweep(spec, workers=workers)
    except (ValueError, FileNotFoundError) as exc:
        _fail(str(exc))

    _write_rows(rows, out)


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

@cli.command()
@_grid_options
@_run_options
def compare(config_path: Optional[Path], out: Optional[Path], workers: int, **flags: Any) -> None:
    """Run fig1, fig2, teleport and classical side by side with the G=1 crossing check."""
    from qndlink.config import sweep_spec_from_options
    from qndlink.sweep import COMPARE_KINDS
    from qndlink.sweep import compare as compare_schemes

    try:
        options = _options(config_path, _shared_flags(**flags))
        options.pop("protocol", None)
        options["protocols"] = [kind.value for kind in COMPARE_KINDS]
        report = compare_schemes(sweep_spec_from_options(options), workers=workers)
    except (ValueError, FileNotFoundError) as exc:
        _fail(str(exc))

    _write_rows(report.rows, out)

    table = Table(title="channel metric, fig1 vs fig2")
    for column in ("G", "r", "T", "noise_var", "fig1", "fig2", "ordering"):
        table.add_column(column, justify="right")
    for check in report.crossings:
        table.add_row(
            f"{check.gain:g}", f"{check.squeezing:g}", f"{check.transmitivity:g}", f"{check.noise_var:g}",
            f"{check.metric_fig1:.10g}", f"{check.metric_fig2:.10g}", check.ordering,
        )
    err_console.print(table)

    if not report.unit_gain_ok:
        err_console.print("[bold red]Fig. 1 and Fig. 2 differ at G = 1.[/bold red]")
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

@cli.command()
@click.option("--seed", type=int, default=7, show_default=True, help="Seed for random and sampled checks.")
@click.option("--runs", type=click.IntRange(min=2), default=1_000_000, show_default=True,
              help="Trajectories per oracle comparison.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Worker threads.")
@click.option("--skip-oracle", is_flag=True, help="Skip the trajectory comparison.")
def validate(seed: int, runs: int, workers: int, skip_oracle: bool) -> None:
    """Run the closed-form, property and ensemble-vs-oracle checks."""
    from qndlink.validator import print_result, run_all_checks

    try:
        result = run_all_checks(seed=seed, runs=runs, workers=workers, run_oracle=not skip_oracle)
    except Exception as exc:
        console.print(f"[red]✗[/red] Validation error: {escape(str(exc))}")
        raise SystemExit(2)

    print_result(result)
    if not result.ok:
        raise SystemExit(1)

