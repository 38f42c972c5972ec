"""
schemas/slice_key.py – The (report month, geography, industry) slice key.

A report month is stored as the first day of that month and always serialised
as ``YYYY-MM``.  Inputs may be ``"2020-05"``, ``"2020-05-01"`` or a
``datetime.date`` whose day is 1.
"""

from __future__ import annotations

import re
from datetime import date
from typing import Any, List, Optional

from pydantic import BaseModel, field_serializer, field_validator

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


def parse_month(value: Any) -> date:
    """Parse a ``YYYY-MM`` string (or a first-of-month date) into a date."""
    if isinstance(value, date):
        if value.day != 1:
            raise ValueError(f"report month must not carry a day component, got {value.isoformat()}")
        return date(value.year, value.month, 1)
    if isinstance(value, str):
        text = value.strip()
        match = _MONTH_RE.match(text)
        if match:
            year, month = int(match.group(1)), int(match.group(2))
            if not 1 <= month <= 12:
                raise ValueError(f"invalid month in '{value}'")
            return date(year, month, 1)
        return parse_month(date.fromisoformat(text))
    raise ValueError(f"cannot interpret {value!r} as a report month")


def add_months(month: date, delta: int) -> date:
    """Return the first day of the month *delta* months after *month*."""
    index = month.year * 12 + (month.month - 1) + delta
    if index < 0:
        raise ValueError("month arithmetic underflow")
    return date(index // 12, index % 12 + 1, 1)


def month_label(month: date) -> str:
    return f"{month.year:04d}-{month.month:02d}"


class SliceKey(BaseModel):
    """One report slice: a month, a country, and optionally a region and industry."""

    model_config = {"frozen": True, "extra": "forbid"}

    report_date: date
    country: str
    region: Optional[str] = None
    industry: Optional[str] = None

    @field_validator("report_date", mode="before")
    @classmethod
    def _coerce_month(cls, v: Any) -> date:
        return parse_month(v)

    @field_validator("country")
    @classmethod
    def _country_not_blank(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("'country' must not be blank.")
        return v.strip()

    @field_validator("region", "industry")
    @classmethod
    def _optional_not_blank(cls, v: Optional[str], info: Any) -> Optional[str]:
        if v is None:
            return None
        if not v.strip():
            raise ValueError(f"'{info.field_name}' must be omitted rather than blank.")
        return v.strip()

    @field_serializer("report_date")
    def _serialise_month(self, v: date) -> str:
        return month_label(v)

    # ── derived views ────────────────────────────────────────────────────────

    @property
    def month(self) -> str:
        return month_label(self.report_date)

    @property
    def granularity(self) -> str:
        if self.region and self.industry:
            return "region_industry"
        if self.region:
            return "region"
        if self.industry:
            return "country_industry"
        return "country"

    def covering_slices(self) -> List["SliceKey"]:
        """Return the four slices a single hire at this position is counted in.

        The slice must name both a region and an industry.
        """
        if not (self.region and self.industry):
            raise ValueError("covering_slices() needs a slice with both region and industry")
        base = {"report_date": self.report_date, "country": self.country}
        return [
            SliceKey(**base),
            SliceKey(**base, region=self.region),
            SliceKey(**base, industry=self.industry),
            SliceKey(**base, region=self.region, industry=self.industry),
        ]

    def with_date(self, report_date: Any) -> "SliceKey":
        return self.model_copy(update={"report_date": parse_month(report_date)})

    def label(self) -> str:
        """``{date}_{country}[_{region}][_{industry}]`` – used in file names and logs."""
        parts = [self.month, self.country]
        if self.region:
            parts.append(self.region)
        if self.industry:
            parts.append(self.industry)
        return "_".join(parts)
