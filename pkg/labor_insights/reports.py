"""
labor_insights/reports.py – The three published reports, end to end.

    who_is_hiring   employers: rTE over current hires, growth index vs. the
                    previous window's noisy counts
    jobs_available  jobs: rTE over current hires, share of the slice's noisy
                    total hires
    skills_needed   skills: rT over (job, skill) holders for the jobs report's
                    titles, rank only

Each report reads the raw data only to build histograms; once the
mechanisms have returned, row values are computed from their outputs alone.
Budget entries are appended to the ledger whenever a mechanism is invoked,
whatever the report's status.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional

import pandas as pd

from schemas import Metric, RankedReport, ReportConfig, ReportRow, ReportStatus

from .accountant import BudgetLedger, Cost, compose_sequential
from .errors import ConfigError
from .ingest import (
    employer_histogram,
    enforce_single_hire,
    job_histogram,
    known_histogram,
    skill_histogram,
    slice_skills,
    tfidf_prefilter,
    total_distinct_hires,
    truncate_top_dbar,
    window,
)
from .mechanisms import (
    MechanismKind,
    TopKResult,
    known_laplace,
    rt_unknown_gumbel_topk,
    rte_unknown_laplace_topk,
)
from .noise import stream_for

logger = logging.getLogger(__name__)

# Noisy denominators are clamped to at least this before dividing.
DENOMINATOR_FLOOR = 1.0
PERCENT = 100.0

TOTAL_BIN = "__total__"


def _require_metric(config: ReportConfig, metric: Metric) -> None:
    if config.metric is not metric:
        raise ConfigError(f"expected a {metric.value} config, got {config.metric.value}")


def _hire_window(
    events: pd.DataFrame, config: ReportConfig, offset_months: int, single_hire: bool
) -> pd.DataFrame:
    windowed = window(
        events,
        config.slice.report_date,
        config.months_back,
        offset_months=offset_months,
        date_column="hire_date",
    )
    return enforce_single_hire(windowed) if single_hire else windowed


def _record(
    ledger: Optional[BudgetLedger],
    config: ReportConfig,
    mechanism: MechanismKind,
    cost: Cost,
    seed: int,
    conditional: bool = False,
    note: str = "",
) -> Cost:
    if ledger is not None:
        ledger.record(
            config.slice, config.metric, mechanism, cost, conditional=conditional, note=note, root_seed=seed
        )
    return cost


def _ratio_rows(top: TopKResult, denominators: Dict[str, float]) -> List[ReportRow]:
    """Rows in rTE order with value ``100 · noisy / max(noisy_denominator, floor)``."""
    return [
        ReportRow(
            rank=rank,
            element=row.element,
            value=PERCENT * row.noisy_count / max(denominators[row.element], DENOMINATOR_FLOOR),
        )
        for rank, row in enumerate(top.rows, start=1)
    ]


def _finish(config: ReportConfig, rows: List[ReportRow], costs: List[Cost]) -> RankedReport:
    epsilon, delta = compose_sequential(costs) if costs else (0.0, 0.0)
    if not rows:
        logger.info("%s %s: insufficient data.", config.metric.value, config.slice.label())
        return RankedReport.insufficient(config.metric, config.slice, epsilon, delta)
    logger.info(
        "%s %s: %d rows at (%g, %g).",
        config.metric.value,
        config.slice.label(),
        len(rows),
        epsilon,
        delta,
    )
    return RankedReport(
        metric=config.metric,
        slice=config.slice,
        rows=tuple(rows),
        status=ReportStatus.OK,
        epsilon=epsilon,
        delta=delta,
    )


# ---------------------------------------------------------------------------
# Employers
# ---------------------------------------------------------------------------


def who_is_hiring(
    events: pd.DataFrame,
    config: ReportConfig,
    *,
    seed: int,
    ledger: Optional[BudgetLedger] = None,
    single_hire: bool = False,
) -> RankedReport:
    """Top employers by recent hires with a growth index against the previous window.

    The growth index is ``100 · current / previous`` over noisy counts; rows
    keep the rTE ranking of the current counts.
    """
    _require_metric(config, Metric.EMPLOYERS)
    slice_key = config.slice

    current = employer_histogram(_hire_window(events, config, 0, single_hire), slice_key)
    top_dbar = truncate_top_dbar(current, config.params_topk.fetch_limit)
    top = rte_unknown_laplace_topk(
        top_dbar, config.params_topk, stream_for(seed, slice_key, config.metric, "topk")
    )
    costs = [_record(ledger, config, MechanismKind.RTE, config.params_topk.cost, seed)]

    # Previous-window counts only for the released employers.
    previous = employer_histogram(
        _hire_window(events, config, config.months_back, single_hire), slice_key
    )
    previous_known = known_histogram(previous.elements, slice_key, top.elements())
    noisy_previous = known_laplace(
        previous_known, config.params_denominator, stream_for(seed, slice_key, config.metric, "previous")
    )
    costs.append(_record(ledger, config, MechanismKind.KNOWN_LAPLACE, config.params_denominator.cost, seed))

    return _finish(config, _ratio_rows(top, noisy_previous), costs)


# ---------------------------------------------------------------------------
# Jobs
# ---------------------------------------------------------------------------


def jobs_available(
    events: pd.DataFrame,
    config: ReportConfig,
    *,
    seed: int,
    ledger: Optional[BudgetLedger] = None,
    single_hire: bool = False,
) -> RankedReport:
    """Top job titles by recent hires, as a percentage of the slice's total hires."""
    _require_metric(config, Metric.JOBS)
    slice_key = config.slice

    current_events = _hire_window(events, config, 0, single_hire)
    top_dbar = truncate_top_dbar(job_histogram(current_events, slice_key), config.params_topk.fetch_limit)
    top = rte_unknown_laplace_topk(
        top_dbar, config.params_topk, stream_for(seed, slice_key, config.metric, "topk")
    )
    costs = [_record(ledger, config, MechanismKind.RTE, config.params_topk.cost, seed)]

    total = known_histogram(
        {TOTAL_BIN: total_distinct_hires(current_events, slice_key)}, slice_key, (TOTAL_BIN,)
    )
    noisy_total = known_laplace(
        total, config.params_denominator, stream_for(seed, slice_key, config.metric, "denominator")
    )[TOTAL_BIN]
    costs.append(_record(ledger, config, MechanismKind.KNOWN_LAPLACE, config.params_denominator.cost, seed))

    return _finish(config, _ratio_rows(top, {e: noisy_total for e in top.elements()}), costs)


# ---------------------------------------------------------------------------
# Skills
# ---------------------------------------------------------------------------


def skills_needed(
    skill_records: pd.DataFrame,
    jobs_report: RankedReport,
    config: ReportConfig,
    *,
    seed: int,
    ledger: Optional[BudgetLedger] = None,
    tfidf_threshold: Optional[float] = None,
) -> RankedReport:
    """Top skills held by members in the jobs report's titles; ranks only.

    The job list comes from the already privatised *jobs_report*.  The
    ledger entry is marked conditional: the guarantee rests on the skill
    tuples being clean, and on the TF-IDF filter when one is applied.
    """
    _require_metric(config, Metric.SKILLS)
    slice_key = config.slice
    if jobs_report.metric is not Metric.JOBS or jobs_report.slice != slice_key:
        raise ConfigError(
            f"skills report for {slice_key.label()} needs the jobs report of the same slice, "
            f"got {jobs_report.metric.value} for {jobs_report.slice.label()}"
        )
    if jobs_report.status is ReportStatus.INSUFFICIENT_DATA:
        logger.info("skills %s: no jobs released, mechanism not invoked.", slice_key.label())
        return _finish(config, [], [])

    threshold = tfidf_threshold if tfidf_threshold is not None else config.tfidf_threshold
    records = slice_skills(skill_records, slice_key)
    if threshold is not None:
        records = tfidf_prefilter(records, threshold)

    h = skill_histogram(records, slice_key, jobs_report.elements, years_back=config.skill_years_back)
    top = rt_unknown_gumbel_topk(
        truncate_top_dbar(h, config.params_topk.fetch_limit),
        config.params_topk,
        stream_for(seed, slice_key, config.metric, "skills"),
    )
    note = f"tfidf_threshold={threshold:g}" if threshold is not None else ""
    costs = [_record(ledger, config, MechanismKind.RT, config.params_topk.cost, seed, conditional=True, note=note)]

    rows = [ReportRow(rank=rank, element=element) for rank, element in enumerate(top.elements(), start=1)]
    return _finish(config, rows, costs)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def build_report(
    config: ReportConfig,
    *,
    hires: pd.DataFrame,
    seed: int,
    skills: Optional[pd.DataFrame] = None,
    jobs_report: Optional[RankedReport] = None,
    ledger: Optional[BudgetLedger] = None,
    single_hire: bool = False,
) -> RankedReport:
    """Build the report *config* describes."""
    if config.metric is Metric.EMPLOYERS:
        return who_is_hiring(hires, config, seed=seed, ledger=ledger, single_hire=single_hire)
    if config.metric is Metric.JOBS:
        return jobs_available(hires, config, seed=seed, ledger=ledger, single_hire=single_hire)
    if skills is None:
        raise ConfigError("skills reports need skill records")
    if jobs_report is None:
        raise ConfigError(f"skills report for {config.slice.label()} needs a jobs report first")
    return skills_needed(skills, jobs_report, config, seed=seed, ledger=ledger)
