"""
orchestrator – Runs the insights pipeline from configuration to report files.

Public API:
    ConfigResolver  – resolve settings from defaults, config file, environment and flags
    RunSettings     – resolved settings for one run
    load_manifest   – read a saved manifest.json
    Orchestrator    – execute a RunManifest
    RunTracker      – run logs and progress events
    load_status     – load status.json for a run
"""

from .config_resolver import ConfigResolver, RunSettings, load_manifest  # noqa: F401
from .orchestrator import Orchestrator, RunResult  # noqa: F401
from .run_tracker import RunTracker, load_status  # noqa: F401
