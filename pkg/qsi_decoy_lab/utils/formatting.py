"""Formatting utility functions for QSI Decoy Lab."""

import math
from enum import Enum
from typing import Any, Optional


class NumberFormatter:
    """Utility functions for number formatting."""

    @staticmethod
    def format_float(value: float, precision: int = 17) -> str:
        """Locale-independent float with the given significant digits.

        Args:
            value: Number to format
            precision: Significant digits

        Returns:
            Formatted string; nan and inf are written as 'nan', 'inf', '-inf'
        """
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{precision}g")

    @staticmethod
    def format_rate(rate: float) -> str:
        """Key rate in compact scientific notation."""
        if rate == 0:
            return "0"
        return f"{rate:.3e}"

    @staticmethod
    def format_probability(value: Optional[float], decimal_places: int = 5) -> str:
        """Probability with fixed decimals, '-' when missing."""
        if value is None:
            return "-"
        return f"{value:.{decimal_places}f}"

    @staticmethod
    def format_throughput(bits_per_second: float) -> str:
        """Secure throughput with a unit prefix.

        Args:
            bits_per_second: Throughput in bit/s

        Returns:
            Formatted string (e.g., "3.7 Mbit/s")
        """
        units = ["bit/s", "kbit/s", "Mbit/s", "Gbit/s"]
        size = float(bits_per_second)
        unit_index = 0

        while size >= 1000 and unit_index < len(units) - 1:
            size /= 1000
            unit_index += 1

        if unit_index == 0:
            return f"{size:.1f} {units[unit_index]}"
        return f"{size:.2f} {units[unit_index]}"


class DataFormatter:
    """Utility functions for result file cells."""

    @staticmethod
    def csv_cell(value: Any, precision: int = 17) -> str:
        """Render one CSV cell.

        Floats use `precision` significant digits, booleans are 'true'/'false',
        enums their value and missing values an empty cell.
        """
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, Enum):
            return str(value.value)
        if isinstance(value, float):
            return NumberFormatter.format_float(value, precision)
        if isinstance(value, int):
            return str(value)
        return str(value)

    @staticmethod
    def json_value(value: Any) -> Any:
        """Convert values json.dump cannot handle natively."""
        if hasattr(value, "model_dump"):
            return value.model_dump(mode="json")
        if isinstance(value, Enum):
            return value.value
        if hasattr(value, "tolist"):
            return value.tolist()
        return str(value)
