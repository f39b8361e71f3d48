"""Rich table formatting for QSI Decoy Lab."""

from typing import Any, Dict, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..models.imaging import ImagingRunReport
from ..models.sweep import CurveTable
from ..utils.formatting import NumberFormatter


class TableFormatter:
    """Formatter for creating Rich tables."""

    def __init__(self, console: Optional[Console] = None, table_style: str = "rich"):
        """Initialize table formatter.

        Args:
            console: Rich console instance. If None, creates a new one.
            table_style: "rich", "simple" or "minimal"
        """
        self.console = console or Console()
        self.table_style = table_style

    def _table(self, title: str) -> Table:
        if self.table_style == "minimal":
            return Table(title=title, show_header=True, box=None)
        return Table(
            title=title,
            show_header=True,
            header_style="bold blue",
            title_style="bold magenta",
            show_lines=self.table_style == "rich",
        )

    def create_fano_table(self, rows: Sequence[Sequence[float]]) -> Table:
        """Table of (mean_n, g2_zero, F) triples."""
        table = self._table("Fano Factors")
        table.add_column("<n>", justify="right", style="cyan")
        table.add_column("g2(0)", justify="right", style="cyan")
        table.add_column("F", justify="right", style="bold green")
        for mean_n, g2, fano in rows:
            table.add_row(f"{mean_n:g}", f"{g2:g}", f"{fano:.5f}")
        return table

    def create_single_photon_table(
        self, rows: Sequence[Sequence[Optional[float]]], every: int = 10
    ) -> Table:
        """Sampled rows of the single-photon probability comparison."""
        table = self._table("Single-Photon Probability")
        table.add_column("x", justify="right", style="cyan")
        table.add_column("P1 WCS", justify="right", style="yellow")
        table.add_column("P1 HSPS", justify="right", style="green")
        for i, (x, p_wcs, p_hsps) in enumerate(rows):
            if i % every == 0 or i == len(rows) - 1:
                table.add_row(
                    f"{x:.3f}",
                    NumberFormatter.format_probability(p_wcs),
                    NumberFormatter.format_probability(p_hsps),
                )
        return table

    def create_curve_table(
        self, title: str, curves: CurveTable, losses: Optional[Sequence[float]] = None
    ) -> Table:
        """Key rate per (source, mu) at selected losses."""
        loss_points = sorted({r.loss_db for r in curves.rows})
        if losses is not None:
            loss_points = [loss for loss in loss_points if loss in set(losses)]

        table = self._table(title)
        table.add_column("Source", style="magenta")
        table.add_column("mu", justify="right", style="cyan")
        for loss in loss_points:
            table.add_column(f"{loss:g} dB", justify="right", style="green")

        keys = []
        for row in curves.rows:
            if (row.source, row.mu) not in keys:
                keys.append((row.source, row.mu))
        for source, mu in keys:
            by_loss = {r.loss_db: r for r in curves.select(source, mu)}
            cells = []
            for loss in loss_points:
                row = by_loss.get(loss)
                if row is None:
                    cells.append("-")
                elif not row.feasible:
                    cells.append("[red]infeasible[/red]")
                else:
                    cells.append(NumberFormatter.format_rate(row.rate))
            table.add_row(source.value.upper(), f"{mu:g}", *cells)
        return table

    def create_imaging_panel(self, report: ImagingRunReport) -> Panel:
        """Summary panel of a raster scan."""
        estimates = report.alpha_estimates()
        valid = estimates[~np.isnan(estimates)]
        flag = "[bold red]ATTACK SUSPECTED[/bold red]" if report.eavesdrop_flag else "[green]clean[/green]"
        lines = [
            f"Pixels: {len(report.pixels)} (missing estimates: {len(estimates) - len(valid)})",
            f"Source: {report.source_kind.upper()}  F = {report.fano:.4f}  <n> = {report.mean_photon_number:.4f}",
            f"Sifted bits: {report.sifted_bits:,}  errors: {report.sifted_errors:,}",
            f"QBER: {report.qber_measured:.4f} (threshold {report.qber_threshold:.2f})  {flag}",
        ]
        if len(valid):
            lines.append(f"Mean alpha estimate: {valid.mean():.4f}")
        return Panel("\n".join(lines), title="Raster Scan", border_style="blue")

    def create_optimum_table(self, results: Dict[str, Dict[str, Any]]) -> Table:
        """Optimal intensity, rate, loss limit and throughput per source."""
        table = self._table("Optimal Operating Points")
        table.add_column("Source", style="magenta")
        table.add_column("mu*", justify="right", style="cyan")
        table.add_column("R* (bits/pulse)", justify="right", style="green")
        table.add_column("Max loss (dB)", justify="right", style="yellow")
        table.add_column("Throughput", justify="right", style="bold green")
        for name, result in results.items():
            if not result.get("feasible", False):
                table.add_row(name.upper(), "-", "[red]infeasible[/red]", "-", "-")
                continue
            table.add_row(
                name.upper(),
                f"{result['mu_star']:.4f}",
                NumberFormatter.format_rate(result["rate_star"]),
                result["max_loss_display"],
                NumberFormatter.format_throughput(result["throughput_bps"]),
            )
        return table
