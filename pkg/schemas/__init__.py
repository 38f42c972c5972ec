"""
schemas – Typed models shared by every stage of the insights pipeline.

Exports:
    SliceKey, parse_month, add_months, month_label  – report slices and month arithmetic
    Histogram, DomainKind, validate_histogram       – distinct-count histograms
    PrivacyParams                                   – per-invocation privacy parameters
    RankedReport, ReportRow, Metric, ReportStatus   – privatised report output
    report_to_json / report_from_json               – report serialisation
    HireEvent, SkillRecord                          – raw input rows
    ReportConfig, RunManifest, validate_run_manifest – run configuration
"""

from .slice_key import SliceKey, add_months, month_label, parse_month  # noqa: F401
from .histogram import DomainKind, Histogram, validate_histogram  # noqa: F401
from .privacy_params import PrivacyParams  # noqa: F401
from .ranked_report import (  # noqa: F401
    Metric,
    RankedReport,
    ReportRow,
    ReportStatus,
    histogram_from_json,
    histogram_to_json,
    report_from_json,
    report_to_json,
)
from .records import HIRE_COLUMNS, SKILL_COLUMNS, HireEvent, SkillRecord  # noqa: F401
from .run_manifest import (  # noqa: F401
    RUN_MANIFEST_SCHEMA_VERSION,
    ReportConfig,
    RunManifest,
    validate_run_manifest,
)
from .validation import format_validation_error, validate_model  # noqa: F401
