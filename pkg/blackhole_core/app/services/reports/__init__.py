"""Report artifacts: CSV files and the optional levels plot."""

from .exporter import emit_report, format_value

__all__ = ["emit_report", "format_value"]
