"""
workers/selftest.py – Named self-checks run by ``dpinsights selftest``.

Each :class:`SelfCheck` verifies one property of the installed build at the
published parameters: threshold constants, the noise scales the mechanisms
actually use, sampler goodness of fit, a fast privacy audit and the
no-fabrication property.  Checks are offline and seeded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from schemas import DomainKind, Histogram, PrivacyParams, SliceKey

from labor_insights import mechanisms
from labor_insights.audit import (
    AuditOutcome,
    MIN_AUDIT_TRIALS,
    MIN_SAMPLER_SAMPLES,
    boundary_pair,
    check_never_fabricates,
    check_sampler,
    element_released,
    estimate_privacy_loss,
    mechanism_under_audit,
)
from labor_insights.mechanisms import MechanismKind
from labor_insights.noise import RandomStream

logger = logging.getLogger(__name__)

SELFTEST_SEED = 20_240_601
RTE_THRESHOLD_EXPECTED = (39.4, 0.5)
RT_THRESHOLD_EXPECTED = (261.2, 2.0)
NOISE_BINS = 20_000
NOISE_STD_TOLERANCE = 0.03

TOPK_PARAMS = PrivacyParams(epsilon=0.6, delta=1e-10, l0_sensitivity=1, fetch_limit=1000, k=20)
SKILLS_PARAMS = PrivacyParams(epsilon=0.1, delta=1e-10, fetch_limit=1000, k=20)
COMPANION_PARAMS = PrivacyParams(epsilon=0.6, delta=0.0, l0_sensitivity=1)

_SLICE = SliceKey(report_date="2000-01", country="selftest")

CheckOutcome = Tuple[bool, str]


@dataclass
class SelfCheck:
    check_id: str
    description: str
    run: Callable[[], CheckOutcome]


@dataclass(frozen=True)
class SelfCheckResult:
    check_id: str
    passed: bool
    detail: str


def _within(value: float, expected: Tuple[float, float]) -> CheckOutcome:
    target, tolerance = expected
    return abs(value - target) <= tolerance, f"{value:.3f} (expected {target} ± {tolerance})"


def _threshold_rte() -> CheckOutcome:
    return _within(mechanisms.rte_threshold(TOPK_PARAMS), RTE_THRESHOLD_EXPECTED)


def _threshold_rt() -> CheckOutcome:
    return _within(mechanisms.rt_threshold(SKILLS_PARAMS), RT_THRESHOLD_EXPECTED)


def _rte_noise_scale() -> CheckOutcome:
    """Declared Laplace scale, and the spread the mechanism really adds."""
    scale = mechanisms.laplace_scale(TOPK_PARAMS)
    if not math.isclose(scale, 1 / 0.6):
        return False, f"laplace scale {scale:.4f}, expected {1 / 0.6:.4f}"
    domain = tuple(f"e{i:05d}" for i in range(NOISE_BINS))
    zeros = Histogram(
        slice=_SLICE,
        elements=dict.fromkeys(domain, 0),
        domain_kind=DomainKind.KNOWN,
        domain=domain,
        l0_bound=1,
    )
    noisy = mechanisms.known_laplace(zeros, COMPANION_PARAMS, RandomStream(SELFTEST_SEED, 1))
    std = float(np.std(list(noisy.values()), ddof=1))
    expected = math.sqrt(2.0) / 0.6
    ok = abs(std - expected) <= NOISE_STD_TOLERANCE * expected
    return ok, f"noise std {std:.4f} (expected {expected:.4f} ± {NOISE_STD_TOLERANCE:.0%})"


def _rt_noise_scale() -> CheckOutcome:
    scale = mechanisms.gumbel_threshold_scale(SKILLS_PARAMS)
    return math.isclose(scale, 10.0), f"gumbel scale {scale:.4f} (expected 10)"


def _sampler(kind: str, scale: float) -> CheckOutcome:
    verdict = check_sampler(kind, scale, MIN_SAMPLER_SAMPLES, seed=SELFTEST_SEED)
    return verdict.passes, (
        f"KS p={verdict.ks_pvalue:.4f}, mean {verdict.mean:.4f} vs {verdict.expected_mean:.4f}, "
        f"std {verdict.std:.4f} vs {verdict.expected_std:.4f}"
    )


def _rte_audit() -> CheckOutcome:
    scenario = boundary_pair(MechanismKind.RTE)
    verdict = estimate_privacy_loss(
        mechanism_under_audit(scenario.kind, scenario.params),
        scenario.pair,
        element_released(scenario.element),
        MIN_AUDIT_TRIALS,
        scenario.params.cost,
        seed=SELFTEST_SEED,
    )
    ok = verdict.outcome is AuditOutcome.PASS
    return ok, f"epsilon_hat {verdict.epsilon_hat:.3f} vs declared 0.6 ({verdict.outcome.value})"


def _fabrication() -> CheckOutcome:
    populated = Histogram(
        slice=_SLICE,
        elements={"x": 400, "y": 300, "z": 5},
        domain_kind=DomainKind.UNKNOWN,
        l0_bound=1,
    )
    empty = populated.with_elements({})
    fabricated = 0
    empties_ok = True
    for kind, params in ((MechanismKind.RTE, TOPK_PARAMS), (MechanismKind.RT, SKILLS_PARAMS)):
        mechanism = mechanism_under_audit(kind, params)
        fabricated += check_never_fabricates(mechanism, populated, MIN_AUDIT_TRIALS, seed=SELFTEST_SEED).fabrications
        on_empty = check_never_fabricates(mechanism, empty, MIN_AUDIT_TRIALS, seed=SELFTEST_SEED)
        empties_ok &= on_empty.empty_outputs == on_empty.trials
    ok = fabricated == 0 and empties_ok
    return ok, f"{fabricated} fabricated elements; empty input always empty: {empties_ok}"


SELF_CHECKS: List[SelfCheck] = [
    SelfCheck("threshold_rte", "rTE threshold at ε=0.6, δ=1e-10, Δ=1", _threshold_rte),
    SelfCheck("threshold_rt", "rT threshold at ε=0.1, δ=1e-10, k=20", _threshold_rt),
    SelfCheck("rte_noise_scale", "Laplace scale Δ/ε used by the mechanisms", _rte_noise_scale),
    SelfCheck("rt_noise_scale", "Gumbel scale 1/ε used by rT", _rt_noise_scale),
    SelfCheck("laplace_sampler", "Laplace sampler goodness of fit", lambda: _sampler("laplace", 1 / 0.6)),
    SelfCheck("gumbel_sampler", "Gumbel sampler goodness of fit", lambda: _sampler("gumbel", 10.0)),
    SelfCheck("rte_audit", "fast Monte Carlo audit of rTE", _rte_audit),
    SelfCheck("fabrication", "released elements always come from the input", _fabrication),
]


def run_selftest(checks: Optional[Sequence[SelfCheck]] = None) -> List[SelfCheckResult]:
    """Run *checks* (default: all) and return one result per check."""
    results: List[SelfCheckResult] = []
    for check in checks if checks is not None else SELF_CHECKS:
        try:
            passed, detail = check.run()
        except Exception as exc:
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        level = logging.INFO if passed else logging.ERROR
        logger.log(level, "selftest %s: %s – %s", check.check_id, "ok" if passed else "FAILED", detail)
        results.append(SelfCheckResult(check.check_id, bool(passed), detail))
    return results
