"""
schemas/run_manifest.py – ReportConfig and RunManifest.

A manifest fully determines a run's report files: together with the input
files it pins the root seed, every report's slice and privacy parameters,
and the ingest switches.  Every run writes its manifest beside its outputs.

Published parameters
--------------------
Employers / jobs: rTE with ε=0.6, δ=1e-10, Δ=1, d̄=1000, k=20, plus a known-
domain Laplace companion count with ε=0.6, Δ=1.  Skills: rT with ε=0.1,
δ=1e-10, d̄=1000, k=20.
"""

from __future__ import annotations

from datetime import datetime
from typing import Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, Field, NonNegativeFloat, PositiveInt, model_validator

from .privacy_params import PrivacyParams
from .ranked_report import Metric
from .slice_key import SliceKey
from .validation import validate_model

RUN_MANIFEST_SCHEMA_VERSION = "1.0"

TOPK_EPSILON = 0.6
TOPK_DELTA = 1e-10
COMPANION_EPSILON = 0.6
SKILLS_EPSILON = 0.1
SKILLS_DELTA = 1e-10
FETCH_LIMIT = 1000
TOP_K = 20
HIRE_WINDOW_MONTHS = 3
SKILL_WINDOW_YEARS = 5

SEED_MAX = 2**64 - 1


class ReportConfig(BaseModel):
    """Everything needed to build one (metric, slice) report."""

    model_config = {"frozen": True, "extra": "forbid"}

    metric: Metric
    slice: SliceKey
    params_topk: PrivacyParams
    params_denominator: Optional[PrivacyParams] = None
    months_back: PositiveInt = HIRE_WINDOW_MONTHS
    skill_years_back: PositiveInt = SKILL_WINDOW_YEARS
    # Optional non-DP skills pre-filter; None disables it.
    tfidf_threshold: Optional[NonNegativeFloat] = None

    @model_validator(mode="after")
    def _check_metric_params(self) -> "ReportConfig":
        if self.metric is Metric.SKILLS:
            if self.params_denominator is not None:
                raise ValueError("skills reports take no companion count parameters")
            return self
        if self.params_topk.l0_sensitivity is None:
            raise ValueError(f"{self.metric.value} reports need l0_sensitivity on params_topk")
        if self.params_denominator is None:
            raise ValueError(f"{self.metric.value} reports need params_denominator")
        if self.params_denominator.delta != 0:
            raise ValueError("the companion count is a known-domain Laplace release; delta must be 0")
        if self.tfidf_threshold is not None:
            raise ValueError("tfidf_threshold only applies to skills reports")
        return self

    @classmethod
    def published_defaults(
        cls,
        metric: Metric,
        slice_key: SliceKey,
        tfidf_threshold: Optional[float] = None,
    ) -> "ReportConfig":
        """Return the configuration the published reports were built with."""
        metric = Metric(metric)
        if metric is Metric.SKILLS:
            return cls(
                metric=metric,
                slice=slice_key,
                params_topk=PrivacyParams(
                    epsilon=SKILLS_EPSILON, delta=SKILLS_DELTA, fetch_limit=FETCH_LIMIT, k=TOP_K
                ),
                tfidf_threshold=tfidf_threshold,
            )
        return cls(
            metric=metric,
            slice=slice_key,
            params_topk=PrivacyParams(
                epsilon=TOPK_EPSILON,
                delta=TOPK_DELTA,
                l0_sensitivity=1,
                fetch_limit=FETCH_LIMIT,
                k=TOP_K,
            ),
            params_denominator=PrivacyParams(
                epsilon=COMPANION_EPSILON, delta=0.0, l0_sensitivity=1, fetch_limit=FETCH_LIMIT, k=TOP_K
            ),
        )


class RunManifest(BaseModel):
    """Reproducibility contract for one ``dpinsights report`` run."""

    model_config = {"frozen": True, "extra": "forbid"}

    schema_version: str = RUN_MANIFEST_SCHEMA_VERSION
    root_seed: int = Field(ge=0, le=SEED_MAX)
    seed_source: Literal["flag", "entropy"] = "flag"
    # role (hires | skills | geography | industries) → path
    input_paths: Dict[str, str]
    configs: Tuple[ReportConfig, ...]
    output_dir: str
    created_at: datetime
    strict: bool = True
    enforce_single_hire: bool = False
    workers: PositiveInt = 1

    @model_validator(mode="after")
    def _check_inputs(self) -> "RunManifest":
        if "hires" not in self.input_paths:
            raise ValueError("input_paths must name a 'hires' file")
        needs_skills = any(c.metric is Metric.SKILLS for c in self.configs)
        if needs_skills and "skills" not in self.input_paths:
            raise ValueError("skills reports need a 'skills' input file")
        return self

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


def validate_run_manifest(data: Dict[str, Any]) -> RunManifest:
    """Validate *data* against :class:`RunManifest` (raises ``ValueError``)."""
    return validate_model(RunManifest, data)
