"""
workers – Standalone checks run outside the report pipeline.

``selftest`` holds the sampler, threshold, noise-scale, audit and
fabrication checks behind ``dpinsights selftest``.
"""

from .selftest import SELF_CHECKS, SelfCheckResult, run_selftest  # noqa: F401
