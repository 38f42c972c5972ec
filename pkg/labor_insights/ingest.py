"""
labor_insights/ingest.py – CSV ingestion, windowing, slicing and histograms.

Event frames are pandas DataFrames with the documented CSV columns; the date
column (``hire_date`` or ``observed_date``) is ``datetime64``.  Every
histogram produced here counts DISTINCT members, so one member moves any bin
by at most 1.

Strict mode (the default) rejects the first malformed row with its 1-based
file line number.  Lenient mode skips malformed rows and counts them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from schemas import (
    HIRE_COLUMNS,
    SKILL_COLUMNS,
    DomainKind,
    HireEvent,
    Histogram,
    SkillRecord,
    SliceKey,
    add_months,
    parse_month,
)

from .errors import ConfigError, InputError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

HIRE_DATE = "hire_date"
SKILL_DATE = "observed_date"
DATE_FORMAT = "%Y-%m-%d"

# One hire event touches exactly one employer bin and one title bin.
EVENT_L0_BOUND = 1


# ---------------------------------------------------------------------------
# Taxonomies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Geography:
    """Country → set of region codes, loaded from ``geography.csv``."""

    regions: Mapping[str, FrozenSet[str]] = field(default_factory=dict)

    def contains(self, country: str, region: str) -> bool:
        return region in self.regions.get(country, frozenset())

    def mask(self, countries: pd.Series, regions: pd.Series) -> pd.Series:
        pairs = {(c, r) for c, rs in self.regions.items() for r in rs}
        return pd.Series(
            [(c, r) in pairs for c, r in zip(countries, regions)], index=countries.index, dtype=bool
        )

    def validate_slice(self, slice_key: SliceKey) -> None:
        if slice_key.country not in self.regions:
            raise ConfigError(f"unknown country '{slice_key.country}'")
        if slice_key.region is not None and not self.contains(slice_key.country, slice_key.region):
            raise ConfigError(
                f"region '{slice_key.region}' does not belong to country '{slice_key.country}'"
            )


def _read_lookup(path: PathLike, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputError(f"lookup file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(frame.columns) != list(columns):
        raise InputError(f"{path}: expected header {','.join(columns)}, got {','.join(frame.columns)}")
    return frame.apply(lambda col: col.str.strip())


def load_geography(path: PathLike) -> Geography:
    frame = _read_lookup(path, ("country", "region"))
    regions: Dict[str, set] = {}
    for country, region in zip(frame["country"], frame["region"]):
        regions.setdefault(country, set()).add(region)
    return Geography({c: frozenset(rs) for c, rs in regions.items()})


def load_industries(path: PathLike) -> FrozenSet[str]:
    return frozenset(_read_lookup(path, ("industry",))["industry"])


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------


@dataclass
class IngestResult:
    frame: pd.DataFrame
    rows_read: int
    rows_skipped: int
    path: Optional[Path] = None


def _read_events(
    path: PathLike,
    columns: Sequence[str],
    date_column: str,
    strict: bool,
    geography: Optional[Geography],
) -> IngestResult:
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")

    malformed = 0

    def _skip_bad_line(_fields):
        nonlocal malformed
        malformed += 1
        return None

    try:
        frame = pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            engine="python",
            on_bad_lines="error" if strict else _skip_bad_line,
        )
    except pd.errors.EmptyDataError as exc:
        raise InputError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise InputError(f"{path}: malformed row: {exc}") from exc

    if list(frame.columns) != list(columns):
        raise InputError(
            f"{path}: expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}"
        )

    frame = frame.fillna("").apply(lambda col: col.str.strip())
    problems = {
        "empty field": (frame == "").any(axis=1),
        f"unparseable {date_column}": pd.to_datetime(
            frame[date_column], format=DATE_FORMAT, errors="coerce"
        ).isna(),
    }
    if geography is not None:
        problems["region outside its country"] = ~geography.mask(frame["country"], frame["region"])

    bad = pd.Series(False, index=frame.index)
    for mask in problems.values():
        bad |= mask
    if bad.any():
        if strict:
            first = int(np.flatnonzero(bad.to_numpy())[0])
            reasons = [name for name, mask in problems.items() if mask.iloc[first]]
            # +2: header line plus 1-based numbering.
            raise InputError(f"{path}:{first + 2}: {', '.join(reasons)}")
        frame = frame[~bad]

    skipped = malformed + int(bad.sum())
    frame = frame.copy()
    frame[date_column] = pd.to_datetime(frame[date_column], format=DATE_FORMAT)
    frame = frame.reset_index(drop=True)
    logger.info("Loaded %d rows from %s (%d skipped).", len(frame), path, skipped)
    return IngestResult(frame=frame, rows_read=len(frame) + skipped, rows_skipped=skipped, path=path)


def load_hires(path: PathLike, strict: bool = True, geography: Optional[Geography] = None) -> IngestResult:
    return _read_events(path, HIRE_COLUMNS, HIRE_DATE, strict, geography)


def load_skills(path: PathLike, strict: bool = True, geography: Optional[Geography] = None) -> IngestResult:
    return _read_events(path, SKILL_COLUMNS, SKILL_DATE, strict, geography)


def hires_frame(events: Iterable[HireEvent]) -> pd.DataFrame:
    """Build an event frame from validated :class:`HireEvent` rows."""
    frame = pd.DataFrame([e.model_dump() for e in events], columns=list(HIRE_COLUMNS))
    frame[HIRE_DATE] = pd.to_datetime(frame[HIRE_DATE])
    return frame


def skills_frame(records: Iterable[SkillRecord]) -> pd.DataFrame:
    frame = pd.DataFrame([r.model_dump() for r in records], columns=list(SKILL_COLUMNS))
    frame[SKILL_DATE] = pd.to_datetime(frame[SKILL_DATE])
    return frame


# ---------------------------------------------------------------------------
# Windowing and slicing
# ---------------------------------------------------------------------------


def _date_column(frame: pd.DataFrame, date_column: Optional[str]) -> str:
    if date_column is not None:
        return date_column
    return HIRE_DATE if HIRE_DATE in frame.columns else SKILL_DATE


def window_bounds(report_date: Union[date, str], months_back: int, offset_months: int = 0) -> Tuple[date, date]:
    """First day of the first month and first day AFTER the last month of a window."""
    if months_back < 1:
        raise ValueError(f"months_back must be at least 1, got {months_back}")
    if offset_months < 0:
        raise ValueError(f"offset_months must not be negative, got {offset_months}")
    last = add_months(parse_month(report_date), -offset_months)
    return add_months(last, -(months_back - 1)), add_months(last, 1)


def window(
    events: pd.DataFrame,
    report_date: Union[date, str],
    months_back: int,
    offset_months: int = 0,
    date_column: Optional[str] = None,
) -> pd.DataFrame:
    """Keep events in the *months_back* calendar months ending at the report month.

    ``offset_months`` moves the window back, e.g. ``offset_months=3`` with
    ``months_back=3`` is the three months before the current window.
    """
    start, stop = window_bounds(report_date, months_back, offset_months)
    column = events[_date_column(events, date_column)]
    mask = (column >= pd.Timestamp(start)) & (column < pd.Timestamp(stop))
    return events[mask]


def slice_events(events: pd.DataFrame, slice_key: SliceKey) -> pd.DataFrame:
    mask = events["country"] == slice_key.country
    if slice_key.region is not None:
        mask &= events["region"] == slice_key.region
    if slice_key.industry is not None:
        mask &= events["industry"] == slice_key.industry
    return events[mask]


def slice_skills(records: pd.DataFrame, slice_key: SliceKey) -> pd.DataFrame:
    """Skill tuples are keyed by (country/region, job, skill); industry is ignored."""
    mask = records["country"] == slice_key.country
    if slice_key.region is not None:
        mask &= records["region"] == slice_key.region
    return records[mask]


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------


def _distinct_histogram(events: pd.DataFrame, key: str, slice_key: SliceKey) -> Histogram:
    sliced = slice_events(events, slice_key)
    counts = sliced.groupby(key)["member_id"].nunique()
    return Histogram(
        slice=slice_key,
        elements={str(element): int(count) for element, count in counts.items()},
        domain_kind=DomainKind.UNKNOWN,
        l0_bound=EVENT_L0_BOUND,
    )


def employer_histogram(events: pd.DataFrame, slice_key: SliceKey) -> Histogram:
    """Distinct hired members per employer in the slice (events already windowed)."""
    return _distinct_histogram(events, "employer_id", slice_key)


def job_histogram(events: pd.DataFrame, slice_key: SliceKey) -> Histogram:
    """Distinct hired members per job title in the slice (events already windowed)."""
    return _distinct_histogram(events, "title_id", slice_key)


def skill_histogram(
    records: pd.DataFrame,
    slice_key: SliceKey,
    top_jobs: Sequence[str],
    years_back: int = 5,
) -> Histogram:
    """Per skill, the max over *top_jobs* of distinct members holding (job, skill).

    Counts cover the ``12 * years_back`` months ending at the report month.
    One member may hold many skills, so no l0 bound is declared.
    """
    elements: Dict[str, int] = {}
    if top_jobs:
        recent = window(records, slice_key.report_date, 12 * years_back, date_column=SKILL_DATE)
        recent = slice_skills(recent, slice_key)
        recent = recent[recent["title_id"].isin(list(top_jobs))]
        if not recent.empty:
            per_tuple = recent.groupby(["title_id", "skill_id"])["member_id"].nunique()
            per_skill = per_tuple.groupby(level="skill_id").max()
            elements = {str(skill): int(count) for skill, count in per_skill.items()}
    return Histogram(slice=slice_key, elements=elements, domain_kind=DomainKind.UNKNOWN, l0_bound=None)


def known_histogram(
    counts: Mapping[str, int],
    slice_key: SliceKey,
    domain: Sequence[str],
    l0_bound: int = EVENT_L0_BOUND,
) -> Histogram:
    """Histogram over a declared *domain*, materialising zero counts."""
    domain = tuple(domain)
    return Histogram(
        slice=slice_key,
        elements={element: int(counts.get(element, 0)) for element in domain},
        domain_kind=DomainKind.KNOWN,
        domain=domain,
        l0_bound=l0_bound,
    )


def total_distinct_hires(events: pd.DataFrame, slice_key: SliceKey) -> int:
    return int(slice_events(events, slice_key)["member_id"].nunique())


def truncate_top_dbar(h: Histogram, dbar: int) -> Histogram:
    """Keep the *dbar* largest true counts; ties at the boundary go to the smaller element id."""
    if dbar < 1:
        raise ValueError(f"d̄ must be at least 1, got {dbar}")
    if len(h) <= dbar:
        return h
    ranked = sorted(h.elements.items(), key=lambda item: (-item[1], item[0]))
    kept = dict(ranked[:dbar])
    logger.debug("Truncated %d elements to the top %d.", len(ranked), dbar)
    return h.with_elements(kept)


def tfidf_prefilter(records: pd.DataFrame, stopskill_threshold: float) -> pd.DataFrame:
    """Drop skills whose idf across jobs is below *stopskill_threshold*.

    Jobs are the documents, skills the terms: ``idf = ln(N_jobs / n_jobs_with_skill)``.
    This step does NOT satisfy differential privacy.
    """
    if stopskill_threshold < 0:
        raise ValueError("stopskill_threshold must be non-negative")
    if records.empty:
        return records
    n_jobs = records["title_id"].nunique()
    jobs_per_skill = records.groupby("skill_id")["title_id"].nunique()
    idf = np.log(n_jobs / jobs_per_skill)
    keep = idf[idf >= stopskill_threshold].index
    dropped = len(idf) - len(keep)
    if dropped:
        logger.info("TF-IDF pre-filter dropped %d of %d skills (non-DP step).", dropped, len(idf))
    return records[records["skill_id"].isin(keep)]


# ---------------------------------------------------------------------------
# Hire-multiplicity diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HireDiagnostics:
    hires: int
    members: int
    single_hire_fraction: float


def hire_diagnostics(events: pd.DataFrame) -> HireDiagnostics:
    """Measure how many members were hired at most once in *events*."""
    if events.empty:
        return HireDiagnostics(hires=0, members=0, single_hire_fraction=1.0)
    per_member = events.groupby("member_id").size()
    return HireDiagnostics(
        hires=int(len(events)),
        members=int(len(per_member)),
        single_hire_fraction=float((per_member <= 1).mean()),
    )


def enforce_single_hire(events: pd.DataFrame) -> pd.DataFrame:
    """Keep only each member's first hire (earliest date, then employer, then title)."""
    ordered = events.sort_values([HIRE_DATE, "employer_id", "title_id", "member_id"], kind="mergesort")
    return ordered.drop_duplicates("member_id", keep="first").sort_index()
