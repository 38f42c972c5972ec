"""
orchestrator/config_resolver.py – Layered run configuration.

Values are resolved from, lowest precedence first:

1. ``DEFAULTS``
2. a ``KEY=VALUE`` config file (``--config``; ``#`` comments allowed)
3. ``DPI_*`` environment variables
4. CLI flags (``None`` means "not given")

The resolved :class:`RunSettings` is then turned into a :class:`RunManifest`
by :meth:`ConfigResolver.build_manifest`.  Privacy parameters are never
configurable here; every report uses ``ReportConfig.published_defaults``.
"""

from __future__ import annotations

import logging
import os
import secrets
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, Field, NonNegativeFloat, PositiveInt, ValidationError, field_validator

from schemas import Metric, ReportConfig, RunManifest, SliceKey, format_validation_error, parse_month
from schemas.run_manifest import SEED_MAX

from labor_insights.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "DPI_"

DEFAULTS: Dict[str, Any] = {
    "seed": None,
    "hires": None,
    "skills": None,
    "geography": None,
    "industries": None,
    "out": "out",
    "dates": [],
    "country": None,
    "region": None,
    "industry": None,
    "metrics": [m.value for m in Metric],
    "strict": True,
    "expand_slices": False,
    "tfidf_threshold": None,
    "enforce_single_hire": False,
    "workers": 1,
    "ledger": None,
}

# Keys whose text form is a comma-separated list.
_LIST_KEYS = ("dates", "metrics")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class RunSettings(BaseModel):
    """Fully resolved settings for one ``report`` run."""

    model_config = {"frozen": True, "extra": "forbid"}

    seed: Optional[int] = Field(default=None, ge=0, le=SEED_MAX)
    hires: Optional[str] = None
    skills: Optional[str] = None
    geography: Optional[str] = None
    industries: Optional[str] = None
    out: str = "out"
    dates: Tuple[date, ...] = ()
    country: Optional[str] = None
    region: Optional[str] = None
    industry: Optional[str] = None
    metrics: Tuple[Metric, ...] = tuple(Metric)
    strict: bool = True
    expand_slices: bool = False
    tfidf_threshold: Optional[NonNegativeFloat] = None
    enforce_single_hire: bool = False
    workers: PositiveInt = 1
    ledger: Optional[str] = None

    @field_validator("dates", mode="before")
    @classmethod
    def _parse_dates(cls, v: Any) -> Tuple[date, ...]:
        return tuple(parse_month(d) for d in v)

    @field_validator("strict", "expand_slices", "enforce_single_hire", mode="before")
    @classmethod
    def _parse_bool(cls, v: Any) -> Any:
        if isinstance(v, str):
            lowered = v.strip().lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"expected true/false, got '{v}'")
        return v

    @property
    def ledger_path(self) -> Path:
        return Path(self.ledger) if self.ledger else Path(self.out) / "ledger.jsonl"


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


def _from_prefixed(source: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    """Map ``DPI_FOO_BAR=value`` entries to ``{"foo_bar": value}``."""
    values: Dict[str, Any] = {}
    for key, value in source.items():
        if not key.startswith(ENV_PREFIX) or value is None or value == "":
            continue
        name = key[len(ENV_PREFIX):].lower()
        if name not in DEFAULTS:
            logger.warning("Ignoring unknown configuration key %s", key)
            continue
        values[name] = _split_list(value) if name in _LIST_KEYS else value
    return values


class ConfigResolver:
    """Resolve :class:`RunSettings` from defaults, a config file, the environment and flags."""

    def __init__(
        self,
        config_path: Optional[str] = None,
        environ: Optional[Mapping[str, str]] = None,
    ) -> None:
        self.config_path = config_path
        self.environ = os.environ if environ is None else environ

    def _file_values(self) -> Dict[str, Any]:
        if self.config_path is None:
            return {}
        path = Path(self.config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return _from_prefixed(dotenv_values(path))

    def resolve(self, overrides: Optional[Dict[str, Any]] = None) -> RunSettings:
        """Return the merged settings; raises :class:`ConfigError` on invalid values."""
        values = dict(DEFAULTS)
        values.update(self._file_values())
        values.update(_from_prefixed(self.environ))
        for key, val in (overrides or {}).items():
            if val is None or (isinstance(val, (list, tuple)) and not val):
                continue
            values[key] = val
        try:
            settings = RunSettings.model_validate(values)
        except ValidationError as exc:
            raise ConfigError(format_validation_error("Configuration", exc)) from exc
        logger.debug("Resolved settings: %s", settings.model_dump(mode="json"))
        return settings

    # ------------------------------------------------------------------
    # Manifest construction
    # ------------------------------------------------------------------

    @staticmethod
    def slices(settings: RunSettings) -> List[SliceKey]:
        if not settings.dates:
            raise ConfigError("at least one --date is required")
        if not settings.country:
            raise ConfigError("--country is required")
        slices: List[SliceKey] = []
        for report_date in settings.dates:
            try:
                key = SliceKey(
                    report_date=report_date,
                    country=settings.country,
                    region=settings.region,
                    industry=settings.industry,
                )
                slices.extend(key.covering_slices() if settings.expand_slices else [key])
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return slices

    @classmethod
    def build_manifest(
        cls, settings: RunSettings, created_at: Optional[datetime] = None
    ) -> RunManifest:
        """Expand *settings* into one :class:`ReportConfig` per (date, slice, metric).

        Metrics always run in the order employers, jobs, skills.  Without a
        seed a fresh 64-bit entropy seed is drawn and recorded.
        """
        if not settings.hires:
            raise ConfigError("a hires file is required (--hires or DPI_HIRES)")
        metrics = [m for m in Metric if m in settings.metrics]
        if Metric.SKILLS in metrics and Metric.JOBS not in metrics:
            raise ConfigError("the skills report is built from the jobs report; add --metric jobs")

        if settings.seed is None:
            seed, source = secrets.randbits(64), "entropy"
            logger.info("No seed given; drew entropy seed %d (recorded in the manifest).", seed)
        else:
            seed, source = settings.seed, "flag"

        configs = [
            ReportConfig.published_defaults(
                metric,
                slice_key,
                tfidf_threshold=settings.tfidf_threshold if metric is Metric.SKILLS else None,
            )
            for slice_key in cls.slices(settings)
            for metric in metrics
        ]
        inputs = {
            role: path
            for role, path in (
                ("hires", settings.hires),
                ("skills", settings.skills),
                ("geography", settings.geography),
                ("industries", settings.industries),
            )
            if path
        }
        try:
            return RunManifest(
                root_seed=seed,
                seed_source=source,
                input_paths=inputs,
                configs=tuple(configs),
                output_dir=settings.out,
                created_at=created_at or datetime.now(timezone.utc).replace(microsecond=0),
                strict=settings.strict,
                enforce_single_hire=settings.enforce_single_hire,
                workers=settings.workers,
            )
        except ValidationError as exc:
            raise ConfigError(format_validation_error("RunManifest", exc)) from exc


def load_manifest(path: str) -> RunManifest:
    """Read a saved ``manifest.json``; raises :class:`ConfigError` when invalid."""
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    try:
        return RunManifest.model_validate_json(manifest_path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ConfigError(format_validation_error("RunManifest", exc)) from exc
