"""
schemas/ranked_report.py – Privatised report output.

JSON field names are fixed: ``metric``, ``slice``, ``rows``, ``status``,
``epsilon``, ``delta``.  Row values are rounded to two decimals only when a
report is serialised (:func:`report_to_json`); in memory they keep full
precision.
"""

from __future__ import annotations

import json
from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, Field, PositiveInt, model_validator

from .histogram import Histogram
from .slice_key import SliceKey

VALUE_DECIMALS = 2


class Metric(str, Enum):
    EMPLOYERS = "employers"
    JOBS = "jobs"
    SKILLS = "skills"


class ReportStatus(str, Enum):
    OK = "ok"
    INSUFFICIENT_DATA = "insufficient_data"


class ReportRow(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    rank: PositiveInt
    element: str = Field(min_length=1)
    value: Optional[float] = Field(default=None, allow_inf_nan=False)


class RankedReport(BaseModel):
    """Ordered, privatised rows for one (metric, slice) plus their privacy cost."""

    model_config = {"frozen": True, "extra": "forbid"}

    metric: Metric
    slice: SliceKey
    rows: Tuple[ReportRow, ...] = ()
    status: ReportStatus
    epsilon: float = Field(ge=0, allow_inf_nan=False)
    delta: float = Field(ge=0, lt=1)

    @model_validator(mode="after")
    def _check_structure(self) -> "RankedReport":
        ranks = [row.rank for row in self.rows]
        if ranks != list(range(1, len(self.rows) + 1)):
            raise ValueError(f"row ranks must be exactly 1..{len(self.rows)}, got {ranks}")
        if (self.status is ReportStatus.INSUFFICIENT_DATA) != (not self.rows):
            raise ValueError("status must be insufficient_data if and only if rows is empty")
        if self.metric is Metric.SKILLS:
            if any(row.value is not None for row in self.rows):
                raise ValueError("skills rows are rank-only and must not carry values")
        elif any(row.value is None for row in self.rows):
            raise ValueError(f"{self.metric.value} rows must carry a value")
        return self

    @property
    def cost(self) -> Tuple[float, float]:
        return (self.epsilon, self.delta)

    @property
    def elements(self) -> Tuple[str, ...]:
        return tuple(row.element for row in self.rows)

    @classmethod
    def insufficient(
        cls, metric: Metric, slice_key: SliceKey, epsilon: float, delta: float
    ) -> "RankedReport":
        return cls(
            metric=metric,
            slice=slice_key,
            rows=(),
            status=ReportStatus.INSUFFICIENT_DATA,
            epsilon=epsilon,
            delta=delta,
        )


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def report_to_json(report: RankedReport) -> str:
    """Serialise *report*, rounding row values to :data:`VALUE_DECIMALS`."""
    data = report.model_dump(mode="json")
    for row in data["rows"]:
        if row["value"] is not None:
            row["value"] = round(row["value"], VALUE_DECIMALS)
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def report_from_json(text: str) -> RankedReport:
    return RankedReport.model_validate_json(text)


def histogram_to_json(histogram: Histogram) -> str:
    return json.dumps(histogram.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def histogram_from_json(text: str) -> Histogram:
    return Histogram.model_validate_json(text)
