"""Writes the artifacts of one scenario run into its output directory."""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, Sequence

from ...core.errors import OutputError
from ...core.plant import LOG_FIELDS
from ...core.sniper import write_lts_csv
from ...core.sniper.profiling import write_id_map_csv
from ...core.wire.capture import write_trace_csv
from ..scenarios.runner import DETECTOR_HEADER, ExperimentReport
from .charts import PLOTS_AVAILABLE, plot_levels

logger = logging.getLogger(__name__)

REPORT_HEADER = ("key", "value")
LEVELS_HEADER = ("t_s", "T1_level_cm", "T2_level_cm", "output_level_cm")
PLANT_LOG_HEADER = ("t_s",) + LOG_FIELDS


def format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def emit_report(
    report: ExperimentReport,
    out_dir: Path,
    *,
    emit_ground_truth: bool = False,
    plot: bool = True,
) -> Dict[str, Path]:
    """Write every artifact of ``report``; returns file name -> path."""

    out_dir = Path(out_dir)
    written: Dict[str, Path] = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written["report.csv"] = _write_rows(out_dir / "report.csv", REPORT_HEADER, report.rows())
        if report.trace is not None:
            written["trace.csv"] = write_trace_csv(
                report.trace, out_dir / "trace.csv", emit_ground_truth=emit_ground_truth
            )
        written["plant_log.csv"] = _write_rows(
            out_dir / "plant_log.csv",
            PLANT_LOG_HEADER,
            ((entry.t_s,) + entry.values for entry in report.log),
        )
        levels = report.levels()
        written["levels.csv"] = _write_rows(out_dir / "levels.csv", LEVELS_HEADER, levels)
        if report.lts is not None:
            written["lts.csv"] = write_lts_csv(report.lts, out_dir / "lts.csv")
        if report.id_map is not None:
            written["id_map.csv"] = write_id_map_csv(report.id_map, out_dir / "id_map.csv")
        if report.detector_rows:
            written["detectors.csv"] = _write_rows(
                out_dir / "detectors.csv", DETECTOR_HEADER, (row.as_tuple() for row in report.detector_rows)
            )
        if plot and PLOTS_AVAILABLE and levels:
            path = out_dir / "levels.png"
            path.write_bytes(plot_levels(levels, title=f"{report.scenario} (seed {report.config.seed})"))
            written["levels.png"] = path
    except OSError as exc:
        raise OutputError(f"cannot write artifacts to {out_dir}: {exc}") from exc
    logger.info("wrote %s artifacts to %s", len(written), out_dir)
    return written


__all__ = ["LEVELS_HEADER", "PLANT_LOG_HEADER", "REPORT_HEADER", "emit_report", "format_value"]
