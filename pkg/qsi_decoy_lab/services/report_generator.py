"""Report generation service for QSI Decoy Lab.

Each cmd_* method runs one CLI command end to end: it evaluates the models,
writes the result files through the ExportService, prints a terminal summary
and returns the ReportBundle recorded in manifest.json.
"""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from rich.console import Console

from ..models.imaging import PIXEL_CSV_HEADER, ImagingScene
from ..models.photon import SourceKind
from ..models.protocol import KEY_RATE_CSV_HEADER
from ..models.report import ReportBundle, RunConfig
from ..models.sweep import CURVE_CSV_HEADER, CurveTable
from ..ui.tables import TableFormatter
from ..utils.error_handling import BracketError, HeraldingError, InfeasibleError
from .decoy_security import secure_key_rate, throughput_fom
from .export_service import ExportService
from .imaging import fano_factor, load_scene, simulate_raster_scan, uncertainty_surface
from .photon_sources import crossover_mean, distribution_for, wcs_distribution
from .sweep_optimize import (
    curve_spread,
    max_tolerable_loss,
    optimize_mu,
    protocol_at,
    rate_vs_loss,
    weak_decoy,
)

logger = logging.getLogger(__name__)

SPREAD_CSV_HEADER = ["panel", "loss_db", "spread_wcs", "spread_hsps", "ratio_hsps_wcs"]


def _spread_or_none(table: CurveTable, loss_db: float, source: SourceKind) -> Optional[float]:
    try:
        return curve_spread(table, loss_db, source)
    except InfeasibleError:
        return None


def mean_rate_ratio(table: CurveTable, loss_db: float) -> Optional[float]:
    """Mean over mu of R_HSPS / R_WCS at one loss, using points where both are positive."""
    wcs = {r.mu: r.rate for r in table.at_loss(loss_db, SourceKind.WCS)}
    ratios = [
        r.rate / wcs[r.mu]
        for r in table.at_loss(loss_db, SourceKind.HSPS)
        if r.rate > 0 and wcs.get(r.mu, 0.0) > 0
    ]
    if not ratios:
        return None
    return float(np.mean(ratios))


class ReportGenerator:
    """Service for running figure, simulation and optimization reports."""

    def __init__(
        self,
        config: RunConfig,
        export_service: ExportService,
        console: Optional[Console] = None,
        table_style: str = "rich",
        threads: Optional[int] = None,
    ):
        """Initialize report generator.

        Args:
            config: Fully resolved run configuration
            export_service: Writer bound to the command's output directory
            console: Rich console for terminal summaries
            table_style: Table style from the application settings
            threads: Worker threads (default from QSI_THREADS)
        """
        self.config = config
        self.export = export_service
        self.console = console or Console()
        self.table_formatter = TableFormatter(self.console, table_style)
        self.threads = threads

    def _finish(self, command: str, summary: Dict[str, Any]) -> ReportBundle:
        return self.export.write_manifest(
            command,
            seed=self.config.seed,
            config=self.config.model_dump(mode="json"),
            summary=summary,
        )

    def cmd_fig1(self) -> ReportBundle:
        """Absorption uncertainty surface and the tabulated Fano factors."""
        settings = self.config.fig1
        surface = uncertainty_surface(
            settings.alpha, settings.fano_range, settings.mean_range, settings.steps
        )
        formats = self.config.output_formats
        self.export.export_table(["F", "mean_n", "delta_alpha"], surface.rows(), "fig1", formats)

        fano_rows = [
            [pair.mean_n, pair.g2_zero, fano_factor(pair.mean_n, pair.g2_zero)]
            for pair in settings.fano_pairs
        ]
        self.export.export_table(["mean_n", "g2_zero", "fano"], fano_rows, "fig1_fano", formats)

        self.console.print(self.table_formatter.create_fano_table(fano_rows))
        return self._finish(
            "fig1",
            {
                "alpha": settings.alpha,
                "cells": len(surface.fano_values) * len(surface.mean_values),
                "fano_factors": [row[2] for row in fano_rows],
            },
        )

    def cmd_fig2(self) -> ReportBundle:
        """Single-photon probability of WCS and HSPS versus mean photon number."""
        settings = self.config.fig2
        hsps = self.config.sources.hsps.model_copy(
            update={"correlation_model": settings.correlation_model}
        )
        xs = np.linspace(settings.x_range[0], settings.x_range[1], settings.points).tolist()
        if settings.include_zero:
            xs = [0.0] + xs

        rows: List[List[Optional[float]]] = []
        for x in xs:
            p_wcs = wcs_distribution(x, settings.n_cut).probs[1]
            try:
                p_hsps: Optional[float] = distribution_for(hsps, x, settings.n_cut).probs[1]
            except HeraldingError:
                logger.info("HSPS cannot herald at x=%g; row left empty", x)
                p_hsps = None
            rows.append([x, p_wcs, p_hsps])
        self.export.export_table(
            ["x", "p1_wcs", "p1_hsps"], rows, "fig2", self.config.output_formats
        )

        crossover: Optional[float] = None
        note = None
        try:
            crossover = crossover_mean(hsps, settings.n_cut, settings.crossover_bracket)
        except BracketError as e:
            note = e.message
            logger.warning("No crossover found: %s", e.message)

        crossover_doc = {
            "crossover_x": crossover,
            "bracket": list(settings.crossover_bracket),
            "correlation_model": hsps.correlation_model.value,
            "correlation_prob": hsps.correlation_prob,
            "herald_efficiency": hsps.herald_efficiency,
            "herald_dark": hsps.herald_dark,
            "n_cut": settings.n_cut,
            "note": note,
        }
        self.export.export_to_json(crossover_doc, "fig2_crossover")

        self.console.print(self.table_formatter.create_single_photon_table(rows))
        if crossover is not None:
            self.console.print(f"[bold]Crossover:[/bold] x* = {crossover:.4f}")
        return self._finish("fig2", {"crossover_x": crossover, "points": len(rows)})

    def cmd_fig3(self) -> ReportBundle:
        """Rate-versus-loss panels for both sources, plus spread metrics."""
        spread_rows = []
        ratios: Dict[str, Dict[str, Optional[float]]] = {}
        for panel in self.config.fig3.panels:
            grid = self.config.fig3_grid(panel)
            table = rate_vs_loss(grid, self.threads)
            self.export.export_table(
                CURVE_CSV_HEADER, table.csv_rows(), f"fig3{panel.name}", self.config.output_formats
            )

            ratios[panel.name] = {}
            for loss in grid.loss_points:
                ratio = mean_rate_ratio(table, loss)
                ratios[panel.name][f"{loss:g}"] = ratio
                spread_rows.append(
                    [
                        panel.name,
                        loss,
                        _spread_or_none(table, loss, SourceKind.WCS),
                        _spread_or_none(table, loss, SourceKind.HSPS),
                        ratio,
                    ]
                )

            highlights = [loss for loss in (0.0, 10.0, 20.0, 30.0) if loss in grid.loss_points]
            self.console.print(
                self.table_formatter.create_curve_table(
                    f"Key Rate vs Loss, panel {panel.name}", table, highlights or None
                )
            )

        self.export.export_table(
            SPREAD_CSV_HEADER, spread_rows, "fig3_spread", self.config.output_formats
        )
        return self._finish("fig3", {"ratio_hsps_wcs": ratios})

    def cmd_simulate(self) -> ReportBundle:
        """Monte Carlo raster scan of the configured scene."""
        settings = self.config.imaging
        if settings.scene_path:
            scene = load_scene(settings.scene_path)
        else:
            scene = ImagingScene.uniform(settings.width, settings.height, settings.alpha)

        report = simulate_raster_scan(
            scene,
            self.config.sources.get(settings.source),
            self.config.channel,
            settings.pulses_per_pixel,
            eavesdropper=settings.eavesdropper,
            seed=self.config.seed,
            qber_threshold=settings.qber_threshold,
            n_cut=settings.n_cut,
            threads=self.threads,
        )
        self.export.export_table(
            PIXEL_CSV_HEADER, report.pixel_rows(), "simulate_pixels", self.config.output_formats
        )

        summary = report.summary()
        estimates = report.alpha_estimates()
        valid = estimates[~np.isnan(estimates)]
        summary["alpha_est_mean"] = float(valid.mean()) if len(valid) else None
        summary["alpha_est_std"] = float(valid.std(ddof=1)) if len(valid) > 1 else None
        self.export.export_to_json(summary, "simulate_summary")

        self.console.print(self.table_formatter.create_imaging_panel(report))
        return self._finish("simulate", summary)

    def cmd_optimize(self) -> ReportBundle:
        """Optimal intensity, loss limit and throughput per source.

        Raises:
            InfeasibleError: After writing the report, if no source has a positive rate
        """
        settings = self.config.optimize
        channel = self.config.channel.at_loss(settings.loss_db)

        results: Dict[str, Dict[str, Any]] = {}
        for kind in settings.sources:
            source = self.config.sources.get(kind)
            try:
                optimum = optimize_mu(
                    source,
                    channel,
                    self.config.decoy,
                    bracket=settings.bracket,
                    tolerance=settings.tolerance,
                    decoy_mode=settings.decoy_mode,
                )
                if optimum.rate_star <= settings.rate_floor:
                    raise InfeasibleError(
                        "optimal rate does not exceed the rate floor",
                        details={"rate_star": optimum.rate_star},
                    )
                limit = max_tolerable_loss(
                    source,
                    optimum.mu_star,
                    self.config.channel,
                    self.config.decoy,
                    decoy_mode=settings.decoy_mode,
                    rate_floor=settings.rate_floor,
                    cap_db=settings.loss_cap_db,
                )
            except InfeasibleError as e:
                logger.warning("%s infeasible: %s", kind.value, e.message)
                results[kind.value] = {"feasible": False, "reason": e.message}
                continue

            protocol = protocol_at(self.config.decoy, optimum.mu_star, settings.decoy_mode)
            detail = secure_key_rate(protocol, source, channel)
            self.export.export_table(
                KEY_RATE_CSV_HEADER,
                [detail.csv_row(settings.loss_db, optimum.mu_star, weak_decoy(protocol))],
                f"key_rate_{kind.value}",
                self.config.output_formats,
            )

            results[kind.value] = {
                "feasible": True,
                "mu_star": optimum.mu_star,
                "rate_star": optimum.rate_star,
                "max_loss_db": limit.loss_db,
                "max_loss_exceeds_cap": limit.exceeds_cap,
                "max_loss_display": limit.display(),
                "repetition_rate": source.repetition_rate,
                "throughput_bps": throughput_fom(optimum.rate_star, source.repetition_rate),
            }

        document = {
            "loss_db": settings.loss_db,
            "rate_floor": settings.rate_floor,
            "sources": results,
        }
        self.export.export_to_json(document, "optimum")

        sweep = rate_vs_loss(self.config.sweep_grid(), self.threads)
        self.export.export_table(
            CURVE_CSV_HEADER, sweep.csv_rows(), "sweep", self.config.output_formats
        )

        self.console.print(self.table_formatter.create_optimum_table(results))
        bundle = self._finish("optimize", document)
        if not any(r["feasible"] for r in results.values()):
            raise InfeasibleError(
                "no source reaches a positive key rate",
                details={"loss_db": settings.loss_db, "report": str(self.export.export_dir)},
            )
        return bundle
