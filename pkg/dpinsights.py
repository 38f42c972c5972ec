#!/usr/bin/env python3
"""
dpinsights.py – Command-line entry point for the private labour-market reports.

Usage
-----
    # Validate input files and print hire-multiplicity diagnostics
    dpinsights ingest --hires hires.csv --skills skills.csv --date 2024-07

    # Employers, jobs and skills reports for one slice and month
    dpinsights report --hires hires.csv --skills skills.csv \\
        --date 2024-07 --country US --region CA --seed 42 --out out/

    # The four covering slices (country, region, country+industry, region+industry)
    dpinsights report --hires hires.csv --date 2024-07 --country US \\
        --region CA --industry tech --expand --metric employers --seed 42

    # Re-run a saved manifest
    dpinsights report --manifest out/manifest.json

    # Per-date privacy totals, Monte Carlo audit, self-test
    dpinsights budget --out out/
    dpinsights audit --mechanism rte --trials 200000 --seed 7
    dpinsights selftest

Exit codes: 0 success, 1 internal error or failed check, 2 input error,
3 configuration error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional

from colorama import Fore, Style, init

from labor_insights.errors import ConfigError, InputError

init(autoreset=True)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="KEY=VALUE config file (DPI_* keys)")
    parser.add_argument("--hires", help="hires.csv")
    parser.add_argument("--skills", help="skills.csv")
    parser.add_argument("--geography", help="geography.csv (country,region)")
    parser.add_argument("--industries", help="industries.csv (industry)")
    parser.add_argument("--strict", dest="strict", action="store_const", const=True, default=None,
                        help="Reject the first malformed row (default)")
    parser.add_argument("--lenient", dest="strict", action="store_const", const=False,
                        help="Skip and count malformed rows")
    parser.add_argument("--date", dest="dates", action="append", default=[],
                        help="Report month YYYY-MM (repeatable)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpinsights",
        description="Differentially private top-k labour-market reports",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="Validate input files and print diagnostics")
    _add_input_flags(ingest)

    report = sub.add_parser("report", help="Build reports")
    _add_input_flags(report)
    report.add_argument("--manifest", help="Re-run a saved manifest.json (other flags ignored)")
    report.add_argument("--seed", type=int, help="Root seed (default: fresh entropy, recorded)")
    report.add_argument("--country", help="Country code")
    report.add_argument("--region", help="Region code within the country")
    report.add_argument("--industry", help="Industry code")
    report.add_argument("--metric", dest="metrics", action="append", default=[],
                        choices=["employers", "jobs", "skills"],
                        help="Report type (repeatable; default: all three)")
    report.add_argument("--out", help="Output directory (default: out)")
    report.add_argument("--expand", dest="expand_slices", action="store_const", const=True, default=None,
                        help="Emit the four slices covering --region/--industry")
    report.add_argument("--tfidf-threshold", dest="tfidf_threshold", type=float,
                        help="Drop skills with idf below this (not differentially private)")
    report.add_argument("--enforce-single-hire", dest="enforce_single_hire", action="store_const",
                        const=True, default=None, help="Keep only each member's first hire per window")
    report.add_argument("--workers", type=int, help="Parallel report tasks (default: 1)")

    budget = sub.add_parser("budget", help="Per-date privacy totals from a ledger")
    budget.add_argument("--out", default="out", help="Run output directory (default: out)")
    budget.add_argument("--ledger", help="Ledger file (default: <out>/ledger.jsonl)")

    audit = sub.add_parser("audit", help="Monte Carlo privacy audit on a boundary pair")
    audit.add_argument("--mechanism", choices=["rte", "rt"], default="rte")
    audit.add_argument("--trials", type=int, default=200_000)
    audit.add_argument("--seed", type=int, default=0)
    audit.add_argument("--declared-epsilon", dest="declared_epsilon", type=float)
    audit.add_argument("--declared-delta", dest="declared_delta", type=float)

    sub.add_parser("selftest", help="Run the built-in checks")
    return parser


def _banner(title: str) -> None:
    print(f"{Fore.CYAN}{'=' * 70}")
    print(f"{Fore.CYAN}{title}{Style.RESET_ALL}\n")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = (
        "seed", "hires", "skills", "geography", "industries", "out", "dates", "country",
        "region", "industry", "metrics", "strict", "expand_slices", "tfidf_threshold",
        "enforce_single_hire", "workers",
    )
    return {key: getattr(args, key, None) for key in keys}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    from labor_insights.ingest import (
        hire_diagnostics,
        load_geography,
        load_hires,
        load_skills,
        window,
    )
    from orchestrator.config_resolver import ConfigResolver
    from schemas.run_manifest import HIRE_WINDOW_MONTHS

    settings = ConfigResolver(args.config).resolve(_overrides(args))
    if not settings.hires:
        raise ConfigError("a hires file is required (--hires or DPI_HIRES)")
    geography = load_geography(settings.geography) if settings.geography else None

    hires = load_hires(settings.hires, strict=settings.strict, geography=geography)
    summary: Dict[str, Any] = {
        "hires": {"rows_read": hires.rows_read, "rows_skipped": hires.rows_skipped},
        "diagnostics": {},
    }
    if settings.skills:
        skills = load_skills(settings.skills, strict=settings.strict, geography=geography)
        summary["skills"] = {"rows_read": skills.rows_read, "rows_skipped": skills.rows_skipped}
    scopes = {"all": hires.frame}
    for report_date in settings.dates:
        scopes[report_date.strftime("%Y-%m")] = window(
            hires.frame, report_date, HIRE_WINDOW_MONTHS, date_column="hire_date"
        )
    for name, frame in scopes.items():
        d = hire_diagnostics(frame)
        summary["diagnostics"][name] = {
            "hires": d.hires,
            "members": d.members,
            "single_hire_fraction": round(d.single_hire_fraction, 4),
        }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from orchestrator import ConfigResolver, Orchestrator, RunTracker, load_manifest

    if args.manifest:
        manifest = load_manifest(args.manifest)
        ledger_path = None
    else:
        resolver = ConfigResolver(args.config)
        settings = resolver.resolve(_overrides(args))
        manifest = resolver.build_manifest(settings)
        ledger_path = str(settings.ledger_path)

    _banner("Private labour-market reports")
    print(f"Seed   : {manifest.root_seed} ({manifest.seed_source})")
    print(f"Reports: {len(manifest.configs)}")
    print(f"Output : {manifest.output_dir}\n")

    with RunTracker(manifest.output_dir) as tracker:
        tracker.attach()
        result = Orchestrator(ledger_path=ledger_path).run(manifest, tracker)

    print(f"{'slice':<40} {'metric':<10} {'status':<18} {'rows':>4} {'epsilon':>8} {'delta':>8}")
    for report in result.reports:
        colour = Fore.GREEN if report.rows else Fore.YELLOW
        print(
            f"{colour}{report.slice.label():<40} {report.metric.value:<10} "
            f"{report.status.value:<18} {len(report.rows):>4} {report.epsilon:>8g} {report.delta:>8g}"
            f"{Style.RESET_ALL}"
        )
    print(f"\n{Fore.GREEN}✓ {len(result.files)} files written to {manifest.output_dir}{Style.RESET_ALL}")
    return EXIT_OK


def cmd_budget(args: argparse.Namespace) -> int:
    from pathlib import Path

    from labor_insights.accountant import BudgetLedger, budget_summary, summary_to_json

    path = Path(args.ledger) if args.ledger else Path(args.out) / "ledger.jsonl"
    if not path.is_file():
        raise InputError(f"ledger not found: {path}")
    try:
        ledger = BudgetLedger.load(path)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    print(summary_to_json(budget_summary(ledger)), end="")
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    from labor_insights.audit import (
        AuditOutcome,
        boundary_pair,
        default_events,
        estimate_privacy_loss,
        mechanism_under_audit,
    )

    scenario = boundary_pair(args.mechanism)
    declared = (
        args.declared_epsilon if args.declared_epsilon is not None else scenario.params.epsilon,
        args.declared_delta if args.declared_delta is not None else scenario.params.delta,
    )
    mechanism = mechanism_under_audit(scenario.kind, scenario.params)
    try:
        verdicts = [
            estimate_privacy_loss(mechanism, scenario.pair, event, args.trials, declared, seed=args.seed)
            for event in default_events(scenario.element)
        ]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps([v.model_dump(mode="json") for v in verdicts], indent=2))
    colours = {AuditOutcome.PASS: Fore.GREEN, AuditOutcome.FAIL: Fore.RED, AuditOutcome.INCONCLUSIVE: Fore.YELLOW}
    for v in verdicts:
        print(
            f"{colours[v.outcome]}{v.outcome.value:<13} {v.event_description} "
            f"(epsilon_hat {v.epsilon_hat:.3f}){Style.RESET_ALL}",
            file=sys.stderr,
        )
    failed = any(v.outcome is AuditOutcome.FAIL for v in verdicts)
    return EXIT_INTERNAL if failed else EXIT_OK


def cmd_selftest(args: Optional[argparse.Namespace] = None) -> int:
    from workers.selftest import run_selftest

    results = run_selftest()
    for r in results:
        mark = f"{Fore.GREEN}✓" if r.passed else f"{Fore.RED}✗"
        print(f"{mark} {r.check_id:<16}{Style.RESET_ALL} {r.detail}")
    failed = [r.check_id for r in results if not r.passed]
    if failed:
        print(f"\n{Fore.RED}Failed checks: {', '.join(failed)}{Style.RESET_ALL}")
        return EXIT_INTERNAL
    print(f"\n{Fore.GREEN}All {len(results)} checks passed.{Style.RESET_ALL}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "report": cmd_report,
    "budget": cmd_budget,
    "audit": cmd_audit,
    "selftest": cmd_selftest,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse *argv*, dispatch, and map errors onto exit codes."""
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print(f"\n{Fore.YELLOW}Cancelled.{Style.RESET_ALL}")
        return EXIT_OK
    except InputError as exc:
        print(f"{Fore.RED}Input error: {exc}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"{Fore.RED}Configuration error: {exc}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"{Fore.RED}Error: {exc}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
