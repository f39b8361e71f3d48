"""Export service for QSI Decoy Lab."""

import csv
import io
import json
import logging
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .. import __version__
from ..models.report import ManifestEntry, ReportBundle
from ..utils.error_handling import ExportError
from ..utils.file_utils import FileProcessor
from ..utils.formatting import DataFormatter

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
SOURCE_DATE_EPOCH = "SOURCE_DATE_EPOCH"


def manifest_timestamp() -> str:
    """UTC timestamp, pinned by SOURCE_DATE_EPOCH when it is set."""
    pinned = os.getenv(SOURCE_DATE_EPOCH)
    if pinned:
        try:
            moment = datetime.fromtimestamp(int(pinned), tz=timezone.utc)
            return moment.isoformat()
        except ValueError:
            logger.warning("Ignoring invalid %s=%r", SOURCE_DATE_EPOCH, pinned)
    return datetime.now(timezone.utc).isoformat()


class ExportService:
    """Service for writing result tables, summaries and the run manifest."""

    def __init__(self, export_dir: str = "./qsi-out", precision: int = 17, json_indent: int = 2):
        """Initialize export service.

        Args:
            export_dir: Directory to save result files
            precision: Significant digits for floats in CSV
            json_indent: JSON indentation level
        """
        self.export_dir = FileProcessor.ensure_directory(export_dir)
        self.precision = precision
        self.json_indent = json_indent
        self._written: List[Path] = []

    def _record(self, path: Path) -> str:
        if path not in self._written:
            self._written.append(path)
        logger.debug("Wrote %s", path)
        return str(path)

    def export_to_csv(self, header: Sequence[str], rows: Sequence[Sequence[Any]], filename: str) -> str:
        """Export rows to CSV with a fixed column order.

        Args:
            header: Column names
            rows: Rows in header order
            filename: Output filename (extension added if missing)

        Returns:
            Path to exported file

        Raises:
            ExportError: If a row is malformed or the file cannot be written
        """
        if not filename.endswith(".csv"):
            filename += ".csv"

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise ExportError(
                    f"Row {i} of {filename} has {len(row)} cells, expected {len(header)}",
                    details={"file": filename},
                )
            writer.writerow([DataFormatter.csv_cell(v, self.precision) for v in row])

        output_path = self.export_dir / filename
        try:
            FileProcessor.write_text(output_path, buffer.getvalue())
        except Exception as e:
            raise ExportError(f"Failed to write CSV file: {e}", details={"file": filename}) from e
        return self._record(output_path)

    def export_to_json(self, data: Any, filename: str) -> str:
        """Export data to JSON with sorted keys and a trailing newline.

        Args:
            data: JSON-serializable data (pydantic models are dumped)
            filename: Output filename (extension added if missing)

        Returns:
            Path to exported file

        Raises:
            ExportError: If the data cannot be serialized or written
        """
        if data is None:
            raise ExportError("No data to export", details={"file": filename})
        if not filename.endswith(".json"):
            filename += ".json"

        try:
            text = json.dumps(
                data,
                indent=self.json_indent,
                sort_keys=True,
                default=DataFormatter.json_value,
                ensure_ascii=False,
            )
        except (TypeError, ValueError) as e:
            raise ExportError(f"Cannot serialize {filename}: {e}", details={"file": filename}) from e

        output_path = self.export_dir / filename
        try:
            FileProcessor.write_text(output_path, text + "\n")
        except Exception as e:
            raise ExportError(f"Failed to write JSON file: {e}", details={"file": filename}) from e
        return self._record(output_path)

    def export_table(
        self,
        header: Sequence[str],
        rows: Sequence[Sequence[Any]],
        name: str,
        formats: Sequence[str] = ("csv",),
    ) -> List[str]:
        """Write one table in every requested format.

        JSON tables are written as a list of records keyed by column name.
        """
        paths = []
        if "csv" in formats:
            paths.append(self.export_to_csv(header, rows, name))
        if "json" in formats:
            records = [dict(zip(header, row)) for row in rows]
            paths.append(self.export_to_json(records, name))
        return paths

    def write_manifest(
        self,
        command: str,
        seed: int,
        config: Dict[str, Any],
        summary: Optional[Dict[str, Any]] = None,
    ) -> ReportBundle:
        """Hash every written file and emit manifest.json.

        Args:
            command: CLI command that produced the files
            seed: Seed of the run
            config: Fully resolved run configuration
            summary: Headline numbers of the run

        Returns:
            The ReportBundle that was written
        """
        entries = [
            ManifestEntry(
                path=path.name,
                sha256=FileProcessor.sha256(path),
                bytes=path.stat().st_size,
            )
            for path in self._written
        ]
        bundle = ReportBundle(
            command=command,
            version=__version__,
            timestamp=manifest_timestamp(),
            seed=seed,
            config=config,
            files=entries,
            summary=summary or {},
        )
        self.export_to_json(bundle.model_dump(mode="json"), MANIFEST_NAME)
        self._written = [p for p in self._written if p.name != MANIFEST_NAME]
        logger.info("Wrote %d file(s) and %s to %s", len(entries), MANIFEST_NAME, self.export_dir)
        return bundle
