"""Command line interface for QSI Decoy Lab."""

import json
import logging
from pathlib import Path
from typing import Any, Optional

import click
from rich.console import Console
from rich.logging import RichHandler

from . import __version__
from .config import config_manager, load_run_config, resolve_threads
from .models.report import MAX_SEED
from .services.export_service import ExportService
from .services.report_generator import ReportGenerator
from .utils.error_handling import ErrorHandler, create_user_friendly_error, exit_code_for

DEFAULT_OUT_DIR = "./qsi-out"


def setup_logging(verbose: bool) -> None:
    """Route library logs through rich on stderr."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def run_options(f):
    """Accept --config/--out/--seed after the subcommand as well as before it."""
    f = click.option(
        "--seed", type=click.IntRange(0, MAX_SEED), default=None, help="Override the configured seed"
    )(f)
    f = click.option(
        "--out", "-o", type=click.Path(file_okay=False), default=None, help="Output directory"
    )(f)
    f = click.option(
        "--config",
        "-c",
        type=click.Path(dir_okay=False),
        default=None,
        help="Run configuration (JSON, or TOML by suffix)",
    )(f)
    return f


@click.group()
@click.version_option(version=__version__)
@run_options
@click.option("--settings", type=click.Path(exists=True, dir_okay=False), help="Application settings file")
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.pass_context
def cli(
    ctx: click.Context,
    config: Optional[str],
    out: Optional[str],
    seed: Optional[int],
    settings: Optional[str],
    verbose: bool,
):
    """QSI Decoy Lab - decoy-state QKD and quantum imaging reports.

    Compares weak coherent and heralded single photon sources: photon
    statistics, decoy-state key rates over lossy channels, absorption
    uncertainty and raster scan simulations with eavesdropper detection.

    Data files are identical across reruns with the same configuration and
    seed. Set SOURCE_DATE_EPOCH to pin the manifest.json timestamp as well.
    """
    setup_logging(verbose)
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["error_handler"] = ErrorHandler(verbose=verbose)
    ctx.obj["options"] = {"config": config, "out": out, "seed": seed}

    try:
        if settings:
            config_manager.config_path = settings
            config_manager.reload()
        app_config = config_manager.config
        ctx.obj["settings"] = app_config
        ctx.obj["console"] = Console(no_color=not app_config.ui.colors)
    except Exception as e:
        _fail_initialization(ctx, e)


def _fail_initialization(ctx: click.Context, error: Exception) -> None:
    click.echo(f"Error initializing QSI Decoy Lab: {create_user_friendly_error(error)}", err=True)
    if ctx.obj["verbose"]:
        click.echo(f"Details: {str(error)}", err=True)
    ctx.exit(exit_code_for(error))


def _resolve_run(ctx: click.Context, **overrides: Any) -> None:
    """Load the run configuration; subcommand options win over group options."""
    options = dict(ctx.obj["options"])
    options.update({key: value for key, value in overrides.items() if value is not None})

    try:
        run_config = load_run_config(options["config"], seed=options["seed"])
    except Exception as e:
        _fail_initialization(ctx, e)
        return
    ctx.obj["run_config"] = run_config
    ctx.obj["out_dir"] = Path(options["out"] or run_config.output_dir or DEFAULT_OUT_DIR)


def _run_report(ctx: click.Context, command: str) -> None:
    """Run one cmd_* report into <out>/<command>/ and exit with its code."""
    settings = ctx.obj["settings"]
    handler: ErrorHandler = ctx.obj["error_handler"]
    target = ctx.obj["out_dir"] / command

    def run():
        export = ExportService(
            str(target),
            precision=settings.export.csv_precision,
            json_indent=settings.export.json_indent,
        )
        generator = ReportGenerator(
            ctx.obj["run_config"],
            export,
            console=ctx.obj["console"],
            table_style=settings.ui.table_style,
            threads=resolve_threads(),
        )
        return getattr(generator, f"cmd_{command}")()

    outcome = handler.safe_execute(run, context=command)
    if outcome["success"]:
        bundle = outcome["result"]
        click.echo(f"Wrote {len(bundle.files)} file(s) and manifest.json to {target}")
        return

    error_msg = create_user_friendly_error(outcome["error"])
    click.echo(f"Error running {command}: {error_msg}", err=True)
    if ctx.obj["verbose"] and outcome.get("details"):
        click.echo(f"Details: {json.dumps(outcome['details'], default=str)}", err=True)
    ctx.exit(outcome["exit_code"])


@cli.command()
@run_options
@click.pass_context
def fig1(ctx: click.Context, **options: Any):
    """Absorption uncertainty versus Fano factor and mean photon number."""
    _resolve_run(ctx, **options)
    _run_report(ctx, "fig1")


@cli.command()
@run_options
@click.pass_context
def fig2(ctx: click.Context, **options: Any):
    """Single-photon probability of WCS and HSPS, with the crossover."""
    _resolve_run(ctx, **options)
    _run_report(ctx, "fig2")


@cli.command()
@run_options
@click.pass_context
def fig3(ctx: click.Context, **options: Any):
    """Decoy-state key rate versus channel loss for both sources."""
    _resolve_run(ctx, **options)
    _run_report(ctx, "fig3")


@cli.command()
@run_options
@click.pass_context
def simulate(ctx: click.Context, **options: Any):
    """Monte Carlo raster scan with optional intercept-resend attack."""
    _resolve_run(ctx, **options)
    _run_report(ctx, "simulate")


@cli.command()
@run_options
@click.pass_context
def optimize(ctx: click.Context, **options: Any):
    """Optimal signal intensity, loss limit and throughput per source."""
    _resolve_run(ctx, **options)
    _run_report(ctx, "optimize")


@cli.group()
def config():
    """Configuration management commands."""
    pass


@config.command("show")
@run_options
@click.pass_context
def config_show(ctx: click.Context, **options: Any):
    """Show the fully resolved run configuration as JSON."""
    _resolve_run(ctx, **options)
    run_config = ctx.obj["run_config"]
    click.echo(json.dumps(run_config.model_dump(mode="json"), indent=2, sort_keys=True))


def main():
    """Entry point for the CLI application."""
    cli()
