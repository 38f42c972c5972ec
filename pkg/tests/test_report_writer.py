"""
Tests for labor_insights.report_writer – CSV/JSON report files.
"""

import tempfile
import unittest
from pathlib import Path

from schemas import Metric, RankedReport, ReportRow, ReportStatus, SliceKey
from labor_insights.report_writer import read_report, report_stem, value_column, write_report

SLICE = SliceKey(report_date="2024-07", country="US", region="CA")


def _report(metric, values):
    rows = tuple(ReportRow(rank=i, element=f"e{i}", value=v) for i, v in enumerate(values, start=1))
    return RankedReport(
        metric=metric,
        slice=SLICE,
        rows=rows,
        status=ReportStatus.OK if rows else ReportStatus.INSUFFICIENT_DATA,
        epsilon=1.2,
        delta=1e-10,
    )


class TestReportWriter(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.out = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def test_names_and_columns(self):
        self.assertEqual(report_stem(SLICE, Metric.JOBS), "2024-07_US_CA_jobs")
        self.assertEqual(value_column(Metric.EMPLOYERS), "growth_index")
        self.assertEqual(value_column(Metric.SKILLS), "value")

    def test_csv_rounds_to_two_decimals(self):
        csv_path, json_path = write_report(_report(Metric.EMPLOYERS, [250.0, 133.33333]), self.out)
        self.assertEqual(csv_path.name, "2024-07_US_CA_employers.csv")
        self.assertEqual(
            csv_path.read_bytes(),
            b"rank,element,growth_index\n1,e1,250.00\n2,e2,133.33\n",
        )
        self.assertIn('"value": 133.33', json_path.read_text())

    def test_skills_rows_have_empty_values(self):
        report = RankedReport(
            metric=Metric.SKILLS,
            slice=SLICE,
            rows=(ReportRow(rank=1, element="python"),),
            status=ReportStatus.OK,
            epsilon=0.1,
            delta=1e-10,
        )
        csv_path, _ = write_report(report, self.out)
        self.assertEqual(csv_path.read_text(), "rank,element,value\n1,python,\n")

    def test_insufficient_report_is_header_only(self):
        csv_path, _ = write_report(_report(Metric.JOBS, []), self.out)
        self.assertEqual(csv_path.read_text(), "rank,element,value\n")

    def test_read_back_from_either_file(self):
        report = _report(Metric.JOBS, [12.5, 7.25])
        csv_path, json_path = write_report(report, self.out)
        self.assertEqual(read_report(csv_path), report)
        self.assertEqual(read_report(json_path), report)


if __name__ == "__main__":
    unittest.main()
