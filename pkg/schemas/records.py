"""
schemas/records.py – Raw event-level input rows (the unit of privacy).

CSV headers, in order:

    hires.csv   member_id,employer_id,title_id,country,region,industry,hire_date
    skills.csv  member_id,country,region,title_id,skill_id,observed_date
"""

from __future__ import annotations

from datetime import date
from typing import Annotated, Tuple

from pydantic import BaseModel, StringConstraints

NonEmptyStr = Annotated[str, StringConstraints(strip_whitespace=True, min_length=1)]

HIRE_COLUMNS: Tuple[str, ...] = (
    "member_id", "employer_id", "title_id", "country", "region", "industry", "hire_date",
)
SKILL_COLUMNS: Tuple[str, ...] = (
    "member_id", "country", "region", "title_id", "skill_id", "observed_date",
)


class HireEvent(BaseModel):
    """One member being hired: the protected event."""

    model_config = {"frozen": True, "extra": "forbid"}

    member_id: NonEmptyStr
    employer_id: NonEmptyStr
    title_id: NonEmptyStr
    country: NonEmptyStr
    region: NonEmptyStr
    industry: NonEmptyStr
    hire_date: date


class SkillRecord(BaseModel):
    """A member listing a skill while holding a title in a region."""

    model_config = {"frozen": True, "extra": "forbid"}

    member_id: NonEmptyStr
    country: NonEmptyStr
    region: NonEmptyStr
    title_id: NonEmptyStr
    skill_id: NonEmptyStr
    observed_date: date
