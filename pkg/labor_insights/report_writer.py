"""
labor_insights/report_writer.py – Report files on disk.

Every report is written twice, as ``{label}_{metric}.csv`` and
``{label}_{metric}.json``, where ``label`` is
``{YYYY-MM}_{country}[_{region}][_{industry}]``.  Values are rounded to two
decimals in both files; CSV lines end with ``\\n`` whatever the platform, so
a fixed seed gives byte-identical files.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Tuple, Union

import pandas as pd

from schemas import Metric, RankedReport, SliceKey, report_from_json, report_to_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def value_column(metric: Metric) -> str:
    """Employers rows carry a growth index (ratio × 100), the others a value."""
    return "growth_index" if Metric(metric) is Metric.EMPLOYERS else "value"


def report_stem(slice_key: SliceKey, metric: Metric) -> str:
    return f"{slice_key.label()}_{Metric(metric).value}"


def report_to_frame(report: RankedReport) -> pd.DataFrame:
    return pd.DataFrame(
        [(row.rank, row.element, row.value) for row in report.rows],
        columns=["rank", "element", value_column(report.metric)],
    )


def write_report(report: RankedReport, out_dir: PathLike) -> Tuple[Path, Path]:
    """Write *report* as CSV and JSON into *out_dir*; return both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = report_stem(report.slice, report.metric)
    csv_path = out_dir / f"{stem}.csv"
    json_path = out_dir / f"{stem}.json"
    report_to_frame(report).to_csv(csv_path, index=False, float_format="%.2f", lineterminator="\n")
    json_path.write_text(report_to_json(report), encoding="utf-8")
    logger.debug("Wrote %s and %s", csv_path.name, json_path.name)
    return csv_path, json_path


def read_report(path: PathLike) -> RankedReport:
    """Load a report from its JSON file (a ``.csv`` path is mapped to its JSON twin)."""
    path = Path(path)
    if path.suffix == ".csv":
        path = path.with_suffix(".json")
    return report_from_json(path.read_text(encoding="utf-8"))
