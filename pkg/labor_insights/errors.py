"""
labor_insights/errors.py – Exception hierarchy for the insights pipeline.

The CLI maps these onto exit codes: ``InputError`` → 2, ``ConfigError`` → 3,
anything else → 1.
"""

from __future__ import annotations


class InsightsError(Exception):
    """Base class for every error raised deliberately by this package."""


class InputError(InsightsError):
    """Input files are missing, unreadable or contain malformed rows."""


class ConfigError(InsightsError):
    """A manifest, config file or flag combination is invalid."""


class MechanismError(InsightsError, ValueError):
    """A privacy mechanism was called outside its preconditions."""
