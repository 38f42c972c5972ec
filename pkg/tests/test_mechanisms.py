"""
Tests for labor_insights.mechanisms – thresholds, scales and the four mechanisms.
"""

import math
import unittest
from collections import Counter
from unittest.mock import patch

import numpy as np

from schemas import DomainKind, Histogram, PrivacyParams, SliceKey
from labor_insights.errors import MechanismError
from labor_insights.ingest import truncate_top_dbar
from labor_insights.mechanisms import (
    MechanismKind,
    TopKResult,
    TopKRow,
    gumbel_threshold_scale,
    gumbel_topk_scale,
    known_gumbel_topk,
    known_laplace,
    laplace_scale,
    rt_threshold,
    rt_unknown_gumbel_topk,
    rte_threshold,
    rte_unknown_laplace_topk,
)
from labor_insights.noise import RandomStream

SLICE = SliceKey(report_date="2024-07", country="US")
TOPK = PrivacyParams(epsilon=0.6, delta=1e-10, l0_sensitivity=1, fetch_limit=1000, k=20)
SKILLS = PrivacyParams(epsilon=0.1, delta=1e-10, fetch_limit=1000, k=20)
PURE = PrivacyParams(epsilon=0.6, delta=0.0, l0_sensitivity=1)


def _unknown(elements, l0_bound=1):
    return Histogram(slice=SLICE, elements=elements, domain_kind=DomainKind.UNKNOWN, l0_bound=l0_bound)


def _known(elements):
    return Histogram(
        slice=SLICE, elements=elements, domain_kind=DomainKind.KNOWN, domain=tuple(elements), l0_bound=1
    )


# ---------------------------------------------------------------------------
# Scales and thresholds
# ---------------------------------------------------------------------------


class TestThresholds(unittest.TestCase):

    def test_rte_threshold_near_forty(self):
        self.assertAlmostEqual(rte_threshold(TOPK), 39.4, delta=0.5)

    def test_rt_threshold_near_260(self):
        self.assertAlmostEqual(rt_threshold(SKILLS), 261.2, delta=2.0)

    def test_rte_threshold_formula(self):
        params = PrivacyParams(epsilon=1.0, delta=1e-6, l0_sensitivity=2)
        self.assertAlmostEqual(rte_threshold(params), 1 + 2 * math.log(2 / 1e-6))

    def test_rt_threshold_formula(self):
        self.assertAlmostEqual(rt_threshold(SKILLS), 1 + math.log(20 / 1e-10) / 0.1)

    def test_thresholds_need_positive_delta(self):
        with self.assertRaises(MechanismError):
            rte_threshold(PURE)
        with self.assertRaises(MechanismError):
            rt_threshold(PrivacyParams(epsilon=0.1))

    def test_scales(self):
        self.assertAlmostEqual(laplace_scale(TOPK), 1 / 0.6)
        self.assertAlmostEqual(gumbel_threshold_scale(SKILLS), 10.0)
        self.assertAlmostEqual(gumbel_topk_scale(SKILLS), 200.0)

    def test_laplace_scale_needs_l0(self):
        with self.assertRaises(MechanismError):
            laplace_scale(SKILLS)


# ---------------------------------------------------------------------------
# Known domain
# ---------------------------------------------------------------------------


class TestKnownLaplace(unittest.TestCase):

    def test_releases_every_domain_element(self):
        noisy = known_laplace(_known({"a": 5, "b": 0}), PURE, RandomStream(1))
        self.assertEqual(set(noisy), {"a", "b"})

    def test_reproducible(self):
        h = _known({"a": 5, "b": 0})
        self.assertEqual(known_laplace(h, PURE, RandomStream(3)), known_laplace(h, PURE, RandomStream(3)))

    def test_noise_is_lexicographic_draw_order(self):
        # The same stream gives each element the same draw whatever the counts.
        a = known_laplace(_known({"a": 0, "b": 0}), PURE, RandomStream(4))
        b = known_laplace(_known({"a": 100, "b": 7}), PURE, RandomStream(4))
        self.assertAlmostEqual(b["a"] - a["a"], 100.0)
        self.assertAlmostEqual(b["b"] - a["b"], 7.0)

    def test_rejects_delta(self):
        with self.assertRaises(MechanismError):
            known_laplace(_known({"a": 1}), TOPK, RandomStream(1))

    def test_rejects_unknown_domain(self):
        with self.assertRaises(MechanismError):
            known_laplace(_unknown({"a": 1}), PURE, RandomStream(1))

    def test_empty_domain(self):
        self.assertEqual(known_laplace(_known({}), PURE, RandomStream(1)), {})


class TestKnownGumbel(unittest.TestCase):

    def test_returns_k_elements_without_counts(self):
        params = PrivacyParams(epsilon=1.0, k=2)
        result = known_gumbel_topk(_known({"a": 10, "b": 5, "c": 1}), params, RandomStream(1))
        self.assertEqual(len(result), 2)
        self.assertFalse(result.released_counts)
        self.assertTrue(all(row.noisy_count is None for row in result.rows))

    def test_k_larger_than_domain_rejected(self):
        with self.assertRaises(MechanismError):
            known_gumbel_topk(_known({"a": 1}), PrivacyParams(epsilon=1.0, k=2), RandomStream(1))

    def test_single_element_domain(self):
        for epsilon in (0.01, 1.0, 50.0):
            result = known_gumbel_topk(_known({"only": 3}), PrivacyParams(epsilon=epsilon, k=1), RandomStream(5))
            self.assertEqual(result.elements(), ["only"])

    def test_k_equal_to_domain_is_permutation(self):
        counts = {"a": 9, "b": 4, "c": 4, "d": 0}
        params = PrivacyParams(epsilon=0.5, k=4)
        orders = set()
        for t in range(200):
            released = known_gumbel_topk(_known(counts), params, RandomStream(6, t)).elements()
            self.assertEqual(sorted(released), sorted(counts))
            orders.add(tuple(released))
        self.assertGreater(len(orders), 1)

    def test_k1_matches_exponential_mechanism(self):
        # Gumbel-max with scale k/ε selects e with probability ∝ exp(ε·h_e / k).
        epsilon, counts = 1.0, {"a": 3, "b": 2, "c": 0}
        params = PrivacyParams(epsilon=epsilon, k=1)
        h = _known(counts)
        trials = 100_000
        stream = RandomStream(2024)
        picks = Counter(known_gumbel_topk(h, params, stream).rows[0].element for _ in range(trials))
        weights = {e: math.exp(epsilon * c) for e, c in counts.items()}
        total = sum(weights.values())
        tv = 0.5 * sum(abs(picks[e] / trials - weights[e] / total) for e in counts)
        self.assertLess(tv, 0.01)


# ---------------------------------------------------------------------------
# Unknown domain
# ---------------------------------------------------------------------------


class TestRTE(unittest.TestCase):

    def test_large_counts_released_in_order_with_counts(self):
        h = _unknown({"big": 500, "mid": 300, "small": 2})
        result = rte_unknown_laplace_topk(h, TOPK, RandomStream(7))
        self.assertEqual(result.mechanism, MechanismKind.RTE)
        self.assertEqual(result.elements(), ["big", "mid"])
        self.assertTrue(result.released_counts)
        self.assertAlmostEqual(result.rows[0].noisy_count, 500, delta=30)

    def test_at_most_k_rows(self):
        h = _unknown({f"e{i:02d}": 1000 + i for i in range(40)})
        result = rte_unknown_laplace_topk(h, TOPK, RandomStream(8))
        self.assertEqual(len(result), 20)
        counts = [row.noisy_count for row in result.rows]
        self.assertEqual(counts, sorted(counts, reverse=True))

    def test_empty_histogram_gives_empty_output(self):
        self.assertEqual(len(rte_unknown_laplace_topk(_unknown({}), TOPK, RandomStream(1))), 0)

    def test_below_threshold_rarely_released(self):
        h = _unknown({"x": 5})
        released = sum(len(rte_unknown_laplace_topk(h, TOPK, RandomStream(9, t))) for t in range(2000))
        self.assertEqual(released, 0)

    def test_needs_delta(self):
        with self.assertRaises(MechanismError):
            rte_unknown_laplace_topk(_unknown({"a": 1}), PURE.model_copy(update={"delta": 0.0}), RandomStream(1))

    def test_rejects_known_domain(self):
        with self.assertRaises(MechanismError):
            rte_unknown_laplace_topk(_known({"a": 1}), TOPK, RandomStream(1))

    def test_fetch_limit_enforced(self):
        params = TOPK.model_copy(update={"fetch_limit": 20})
        h = _unknown({f"e{i}": 100 for i in range(21)})
        with self.assertRaises(MechanismError):
            rte_unknown_laplace_topk(h, params, RandomStream(1))

    def test_tie_broken_by_element_id(self):
        h = _unknown({"b": 100, "a": 100})
        with patch("labor_insights.mechanisms.laplace_sample", side_effect=[0.0, np.zeros(2)]):
            result = rte_unknown_laplace_topk(h, TOPK, RandomStream(1))
        self.assertEqual(result.elements(), ["a", "b"])

    def test_strict_threshold_comparison(self):
        threshold = rte_threshold(TOPK)
        h = _unknown({"a": 50})
        # noisy count equal to noisy threshold is not released.
        with patch(
            "labor_insights.mechanisms.laplace_sample",
            side_effect=[0.0, np.array([threshold - 50])],
        ):
            result = rte_unknown_laplace_topk(h, TOPK, RandomStream(1))
        self.assertEqual(len(result), 0)

    def test_truncated_input_keeps_published_threshold(self):
        elements = {f"e{i:04d}": 100 for i in range(1000)}
        elements.update({f"f{i:03d}": 90 for i in range(500)})
        top = truncate_top_dbar(_unknown(elements), 1000)
        self.assertEqual(len(top), 1000)
        for t in range(200):
            self.assertEqual(len(rte_unknown_laplace_topk(top, TOPK, RandomStream(10, t))), 20)

    def test_small_count_suppressed_large_counts_kept(self):
        h = _unknown({"a": 500, "b": 450, "c": 2})
        trials = 100_000
        seen = Counter()
        for t in range(trials):
            seen.update(rte_unknown_laplace_topk(h, TOPK, RandomStream(11, t)).elements())
        self.assertLess(seen["c"] / trials, 1e-4)
        self.assertGreater(seen["a"] / trials, 0.999)
        self.assertGreater(seen["b"] / trials, 0.999)

    def test_raising_a_count_never_lowers_its_standing(self):
        base = {"a": 38, "b": 45, "c": 40}
        bumped = {**base, "a": 39}
        released = 0
        for t in range(500):
            before = rte_unknown_laplace_topk(_unknown(base), TOPK, RandomStream(12, t))
            after = rte_unknown_laplace_topk(_unknown(bumped), TOPK, RandomStream(12, t))
            if "a" not in before.elements():
                continue
            released += 1
            self.assertIn("a", after.elements())
            self.assertLessEqual(after.elements().index("a"), before.elements().index("a"))
            old = before.rows[before.elements().index("a")].noisy_count
            new = after.rows[after.elements().index("a")].noisy_count
            self.assertAlmostEqual(new - old, 1.0)
        self.assertGreater(released, 0)


class TestRT(unittest.TestCase):

    def test_rank_only(self):
        h = _unknown({"python": 10_000, "sql": 50}, l0_bound=None)
        result = rt_unknown_gumbel_topk(h, SKILLS, RandomStream(3))
        self.assertFalse(result.released_counts)
        self.assertEqual(result.elements(), ["python"])

    def test_dominant_skill_ranked_first(self):
        elements = {"dominant": 10_000, **{f"s{i:02d}": 50 + i for i in range(30)}}
        h = _unknown(elements, l0_bound=None)
        first = sum(
            rt_unknown_gumbel_topk(h, SKILLS, RandomStream(77, t)).elements()[:1] == ["dominant"]
            for t in range(10_000)
        )
        self.assertGreater(first / 10_000, 0.999)

    def test_counts_below_fifty_stay_hidden(self):
        h = _unknown({"a": 49, "b": 30, "c": 12}, l0_bound=None)
        non_empty = sum(
            len(rt_unknown_gumbel_topk(h, SKILLS, RandomStream(13, t))) > 0 for t in range(100_000)
        )
        self.assertEqual(non_empty, 0)

    def test_raising_a_count_never_lowers_its_rank(self):
        base = {"a": 255, "b": 270, "c": 262}
        bumped = {**base, "a": 256}
        released = 0
        for t in range(500):
            before = rt_unknown_gumbel_topk(_unknown(base, None), SKILLS, RandomStream(14, t)).elements()
            after = rt_unknown_gumbel_topk(_unknown(bumped, None), SKILLS, RandomStream(14, t)).elements()
            if "a" not in before:
                continue
            released += 1
            self.assertIn("a", after)
            self.assertLessEqual(after.index("a"), before.index("a"))
        self.assertGreater(released, 0)

    def test_empty_histogram(self):
        self.assertEqual(len(rt_unknown_gumbel_topk(_unknown({}, None), SKILLS, RandomStream(1))), 0)


class TestTopKResult(unittest.TestCase):

    def test_counts_must_match_flag(self):
        with self.assertRaises(ValueError):
            TopKResult(mechanism=MechanismKind.RT, rows=(TopKRow(element="a", noisy_count=1.0),), released_counts=False)
        with self.assertRaises(ValueError):
            TopKResult(mechanism=MechanismKind.RTE, rows=(TopKRow(element="a"),), released_counts=True)


if __name__ == "__main__":
    unittest.main()
