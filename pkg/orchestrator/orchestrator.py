"""
orchestrator/orchestrator.py – Executes a RunManifest.

Pipeline:
  1. Validate slices against the geography/industry taxonomies (optional)
  2. Load hires (and skills, when a skills report is requested)
  3. Write ``manifest.json``
  4. Build every report, one task per (date, slice): employers, jobs, skills
  5. Write report files and append the tasks' ledger entries in manifest order
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from schemas import Metric, RankedReport, ReportConfig, RunManifest, SliceKey

from labor_insights.accountant import BudgetEntry, BudgetLedger
from labor_insights.errors import ConfigError
from labor_insights.ingest import (
    Geography,
    hire_diagnostics,
    load_geography,
    load_hires,
    load_industries,
    load_skills,
    window,
)
from labor_insights.report_writer import write_report
from labor_insights.reports import build_report

from .run_tracker import RunTracker

logger = logging.getLogger(__name__)

# Fraction of members expected to be hired at most once per window.
SINGLE_HIRE_EXPECTATION = 0.95

Group = Tuple[SliceKey, List[ReportConfig]]


@dataclass
class RunResult:
    manifest_path: Path
    ledger: BudgetLedger
    reports: List[RankedReport] = field(default_factory=list)
    files: List[Path] = field(default_factory=list)


def group_configs(configs) -> List[Group]:
    """Group configs by slice (slices carry the date), keeping manifest order."""
    groups: Dict[SliceKey, List[ReportConfig]] = {}
    for config in configs:
        groups.setdefault(config.slice, []).append(config)
    for slice_key, members in groups.items():
        metrics = [c.metric for c in members]
        if len(set(metrics)) != len(metrics):
            raise ConfigError(f"duplicate report configs for {slice_key.label()}")
        if Metric.SKILLS in metrics and Metric.JOBS not in metrics:
            raise ConfigError(f"skills report for {slice_key.label()} has no jobs report to build on")
        order = [Metric.EMPLOYERS, Metric.JOBS, Metric.SKILLS]
        members.sort(key=lambda c: order.index(c.metric))
    return list(groups.items())


class Orchestrator:
    """Runs every report in a manifest and persists outputs, manifest and ledger."""

    def __init__(self, ledger_path: Optional[str] = None) -> None:
        self.ledger_path = ledger_path

    def _validate_taxonomies(self, manifest: RunManifest) -> Optional[Geography]:
        geography = None
        geography_path = manifest.input_paths.get("geography")
        if geography_path:
            geography = load_geography(geography_path)
            for config in manifest.configs:
                geography.validate_slice(config.slice)
        industries_path = manifest.input_paths.get("industries")
        if industries_path:
            industries = load_industries(industries_path)
            for config in manifest.configs:
                industry = config.slice.industry
                if industry is not None and industry not in industries:
                    raise ConfigError(f"unknown industry '{industry}'")
        return geography

    def _check_hire_multiplicity(self, hires: pd.DataFrame, groups: List[Group]) -> None:
        windows = sorted(
            {
                (slice_key.report_date, config.months_back)
                for slice_key, members in groups
                for config in members
                if config.metric is not Metric.SKILLS
            }
        )
        for report_date, months_back in windows:
            diagnostics = hire_diagnostics(window(hires, report_date, months_back, date_column="hire_date"))
            if diagnostics.members and diagnostics.single_hire_fraction < SINGLE_HIRE_EXPECTATION:
                logger.warning(
                    "Fewer than %.0f%% of members hired at most once in the %d-month window ending %s; "
                    "consider enforce_single_hire.",
                    100 * SINGLE_HIRE_EXPECTATION,
                    months_back,
                    report_date.strftime("%Y-%m"),
                )

    def _run_group(
        self,
        group: Group,
        manifest: RunManifest,
        hires: pd.DataFrame,
        skills: Optional[pd.DataFrame],
    ) -> Tuple[List[RankedReport], Tuple[BudgetEntry, ...]]:
        # Private ledger per task; merged by the caller in manifest order.
        ledger = BudgetLedger()
        reports: List[RankedReport] = []
        jobs_report: Optional[RankedReport] = None
        for config in group[1]:
            report = build_report(
                config,
                hires=hires,
                skills=skills,
                jobs_report=jobs_report,
                seed=manifest.root_seed,
                ledger=ledger,
                single_hire=manifest.enforce_single_hire,
            )
            if config.metric is Metric.JOBS:
                jobs_report = report
            reports.append(report)
        return reports, ledger.entries

    def run(self, manifest: RunManifest, tracker: Optional[RunTracker] = None) -> RunResult:
        """Build, write and account for every report in *manifest*."""

        def _emit(stage: str, message: str, percent: Optional[int] = None) -> None:
            if tracker is not None:
                tracker.emit(stage, message, percent=percent)

        out_dir = Path(manifest.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        groups = group_configs(manifest.configs)

        _emit("validate", "Validating slices …", percent=0)
        geography = self._validate_taxonomies(manifest)

        _emit("ingest", "Loading input files …", percent=5)
        hires = load_hires(manifest.input_paths["hires"], strict=manifest.strict, geography=geography).frame
        skills = None
        if any(c.metric is Metric.SKILLS for c in manifest.configs):
            skills = load_skills(
                manifest.input_paths["skills"], strict=manifest.strict, geography=geography
            ).frame
        self._check_hire_multiplicity(hires, groups)

        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(manifest.to_json(), encoding="utf-8")
        _emit("manifest", f"Manifest written → {manifest_path}", percent=10)

        ledger = BudgetLedger.load(self.ledger_path or out_dir / "ledger.jsonl")
        result = RunResult(manifest_path=manifest_path, ledger=ledger)

        if manifest.workers > 1 and len(groups) > 1:
            with ThreadPoolExecutor(max_workers=manifest.workers) as pool:
                outcomes = list(pool.map(lambda g: self._run_group(g, manifest, hires, skills), groups))
        else:
            outcomes = [self._run_group(g, manifest, hires, skills) for g in groups]

        total = sum(len(reports) for reports, _ in outcomes)
        done = 0
        for reports, entries in outcomes:
            ledger.extend(entries)
            for report in reports:
                result.reports.append(report)
                result.files.extend(write_report(report, out_dir))
                done += 1
                if tracker is not None:
                    tracker.report_event(report, percent=10 + int(90 * done / total))
        logger.info("Wrote %d reports to %s.", total, out_dir)
        return result
