"""
tests/test_orchestrator.py – Manifest execution, grouping and ledger merging.
"""

from __future__ import annotations

import tempfile
import unittest
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from schemas import Metric, ReportConfig, ReportStatus, RunManifest, SliceKey
from labor_insights.accountant import BudgetLedger, date_cost
from labor_insights.errors import ConfigError, InputError
from labor_insights.ingest import employer_histogram, job_histogram, load_hires, truncate_top_dbar, window
from labor_insights.mechanisms import rte_unknown_laplace_topk
from labor_insights.noise import stream_for
from orchestrator import Orchestrator
from orchestrator.orchestrator import group_configs
from tests.synthetic import FIXTURES, synthetic_hires, synthetic_skills, write_csv

CREATED = datetime(2024, 8, 1, tzinfo=timezone.utc)
BASE = SliceKey(report_date="2024-07", country="US", region="CA", industry="tech")
# The fixture has no NY hires.
EMPTY = SliceKey(report_date="2024-07", country="US", region="NY")
DATES = ("2024-06", "2024-07")
HISTOGRAMS = {Metric.EMPLOYERS: employer_histogram, Metric.JOBS: job_histogram}


def _configs(dates=DATES):
    return tuple(
        ReportConfig.published_defaults(metric, slice_key.with_date(d))
        for d in dates
        for slice_key in BASE.covering_slices()
        for metric in Metric
    )


def _run_configs():
    empty = tuple(ReportConfig.published_defaults(metric, EMPTY.with_date(d)) for d in DATES for metric in Metric)
    return _configs(DATES) + empty


class TestGroupConfigs(unittest.TestCase):

    def test_groups_by_slice_in_metric_order(self):
        reversed_configs = tuple(reversed(_configs(("2024-07",))))
        groups = group_configs(reversed_configs)
        self.assertEqual(len(groups), 4)
        for _, members in groups:
            self.assertEqual([c.metric for c in members], list(Metric))

    def test_duplicates_rejected(self):
        config = ReportConfig.published_defaults(Metric.JOBS, BASE)
        with self.assertRaises(ConfigError):
            group_configs((config, config))

    def test_skills_without_jobs_rejected(self):
        with self.assertRaises(ConfigError):
            group_configs((ReportConfig.published_defaults(Metric.SKILLS, BASE),))


class TestHireMultiplicity(unittest.TestCase):

    def setUp(self):
        # Every member is hired in May and again in July.
        self.hires = pd.concat(
            [
                synthetic_hires(members=100, seed=1, months=("2024-05",)),
                synthetic_hires(members=100, seed=2, months=("2024-07",)),
            ],
            ignore_index=True,
        )
        self.config = ReportConfig.published_defaults(Metric.EMPLOYERS, BASE)

    def test_warns_inside_configured_window(self):
        with self.assertLogs("orchestrator.orchestrator", level="WARNING") as logs:
            Orchestrator()._check_hire_multiplicity(self.hires, group_configs((self.config,)))
        self.assertIn("3-month window", logs.output[0])

    def test_quiet_when_window_excludes_repeat(self):
        one_month = self.config.model_copy(update={"months_back": 1})
        with self.assertNoLogs("orchestrator.orchestrator", level="WARNING"):
            Orchestrator()._check_hire_multiplicity(self.hires, group_configs((one_month,)))


class TestOrchestratorRun(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.tmp = Path(cls._tmp.name)
        hires = synthetic_hires(members=3000, seed=41, regions=("CA",), industries=("tech",))
        cls.hires_csv = write_csv(hires, cls.tmp / "hires.csv")
        cls.hires = load_hires(cls.hires_csv).frame
        cls.skills_csv = write_csv(synthetic_skills(hires, seed=42), cls.tmp / "skills.csv")

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def _manifest(self, out, workers=1, seed=77):
        return RunManifest(
            root_seed=seed,
            input_paths={"hires": str(self.hires_csv), "skills": str(self.skills_csv)},
            configs=_run_configs(),
            output_dir=str(self.tmp / out),
            created_at=CREATED,
            workers=workers,
        )

    def _replayed_topk(self, report):
        config = ReportConfig.published_defaults(report.metric, report.slice)
        current = window(self.hires, report.slice.report_date, config.months_back, date_column="hire_date")
        histogram = HISTOGRAMS[report.metric](current, report.slice)
        top_dbar = truncate_top_dbar(histogram, config.params_topk.fetch_limit)
        stream = stream_for(77, report.slice, report.metric, "topk")
        return tuple(rte_unknown_laplace_topk(top_dbar, config.params_topk, stream).elements())

    def test_full_run_shape_and_budget(self):
        result = Orchestrator().run(self._manifest("serial"))
        self.assertEqual(len(result.reports), 30)
        self.assertEqual(len(result.files), 60)
        self.assertTrue(result.manifest_path.is_file())
        for month in DATES:
            epsilon, delta = date_cost(result.ledger, month, Metric.EMPLOYERS)
            self.assertAlmostEqual(epsilon, 4.8, places=12)
            self.assertAlmostEqual(delta, 4e-10, places=20)
        reloaded = BudgetLedger.load(self.tmp / "serial" / "ledger.jsonl")
        self.assertEqual(len(reloaded), len(result.ledger))

    def test_full_run_rows_follow_rte_ranking(self):
        result = Orchestrator().run(self._manifest("ranking"))
        ok = 0
        for report in result.reports:
            self.assertLessEqual(len(report.rows), 20)
            if report.slice.region == "NY":
                self.assertEqual(report.status, ReportStatus.INSUFFICIENT_DATA, report.slice.label())
                continue
            if report.metric is Metric.SKILLS:
                continue
            self.assertEqual(report.elements, self._replayed_topk(report), report.slice.label())
            ok += report.status is ReportStatus.OK
        self.assertEqual(ok, 16)

    def test_identical_rerun_leaves_ledger_unchanged(self):
        manifest = self._manifest("rerun")
        Orchestrator().run(manifest)
        ledger_path = self.tmp / "rerun" / "ledger.jsonl"
        before = ledger_path.read_bytes()
        again = Orchestrator().run(manifest)
        self.assertEqual(ledger_path.read_bytes(), before)
        for month in DATES:
            epsilon, delta = date_cost(again.ledger, month, Metric.EMPLOYERS)
            self.assertAlmostEqual(epsilon, 4.8, places=12)
            self.assertAlmostEqual(delta, 4e-10, places=20)

    def test_parallel_matches_serial(self):
        serial = Orchestrator().run(self._manifest("cmp_serial"))
        parallel = Orchestrator().run(self._manifest("cmp_parallel", workers=4))
        self.assertEqual(serial.reports, parallel.reports)
        self.assertEqual(
            [(e.slice, e.metric, e.mechanism) for e in serial.ledger.entries],
            [(e.slice, e.metric, e.mechanism) for e in parallel.ledger.entries],
        )
        for path in serial.files:
            self.assertEqual(path.read_bytes(), (self.tmp / "cmp_parallel" / path.name).read_bytes())

    def test_ledger_accumulates_across_runs(self):
        ledger_path = self.tmp / "shared_ledger.jsonl"
        first = Orchestrator(ledger_path=str(ledger_path)).run(self._manifest("acc_a"))
        Orchestrator(ledger_path=str(ledger_path)).run(self._manifest("acc_b", seed=78))
        reloaded = BudgetLedger.load(ledger_path)
        self.assertEqual(len(reloaded), 2 * len(first.ledger))
        epsilon, _ = date_cost(reloaded, "2024-07", Metric.JOBS)
        self.assertAlmostEqual(epsilon, 9.6, places=12)

    def test_unknown_industry_rejected_before_reading(self):
        industries = self.tmp / "industries.csv"
        industries.write_text("industry\nhealth\n")
        manifest = RunManifest(
            root_seed=1,
            input_paths={"hires": str(self.tmp / "absent.csv"), "industries": str(industries)},
            configs=(ReportConfig.published_defaults(Metric.EMPLOYERS, BASE),),
            output_dir=str(self.tmp / "rejected"),
            created_at=CREATED,
        )
        with self.assertRaises(ConfigError):
            Orchestrator().run(manifest)

    def test_region_outside_country_rejected_with_geography(self):
        hires = synthetic_hires(members=200, seed=5, regions=("CA",), industries=("tech",))
        hires.loc[3, "region"] = "BY"
        manifest = RunManifest(
            root_seed=1,
            input_paths={
                "hires": str(write_csv(hires, self.tmp / "stray_region.csv")),
                "geography": str(FIXTURES / "geography.csv"),
            },
            configs=(ReportConfig.published_defaults(Metric.EMPLOYERS, BASE),),
            output_dir=str(self.tmp / "stray"),
            created_at=CREATED,
        )
        with self.assertRaises(InputError):
            Orchestrator().run(manifest)
        lenient = Orchestrator().run(manifest.model_copy(update={"strict": False}))
        self.assertEqual(len(lenient.reports), 1)


if __name__ == "__main__":
    unittest.main()
