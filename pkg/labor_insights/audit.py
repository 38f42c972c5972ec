"""
labor_insights/audit.py – Monte Carlo checks of the privacy contract.

The harness treats mechanisms as black boxes ``(histogram, stream) ->
TopKResult``.  Auditing can refute a privacy claim, never prove one:

* :func:`estimate_privacy_loss` runs a mechanism on two neighbouring
  histograms, bounds the probability of an output event on each side with
  Clopper–Pearson intervals and reports the smallest ε consistent with them.
* :func:`check_sampler` compares a noise sampler with its analytic CDF and
  moments.
* :func:`check_never_fabricates` asserts that no released element lies
  outside the input support.

Trial ``t`` draws from stream id ``2t`` on the base side and ``2t + 1`` on
the neighbour side, so verdicts are reproducible from the seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel, computed_field
from scipy import stats

from schemas import DomainKind, Histogram, PrivacyParams, SliceKey

from .mechanisms import (
    MechanismKind,
    TopKResult,
    TopKRow,
    known_gumbel_topk,
    known_laplace,
    rt_unknown_gumbel_topk,
    rte_unknown_laplace_topk,
)
from .noise import RandomStream, gumbel_cdf, gumbel_sample, laplace_cdf, laplace_sample

logger = logging.getLogger(__name__)

MIN_AUDIT_TRIALS = 10_000
MIN_SAMPLER_SAMPLES = 100_000
DEFAULT_CONFIDENCE = 0.99
KS_MIN_PVALUE = 1e-3
MOMENT_TOLERANCE_SE = 3.0

Mechanism = Callable[[Histogram, RandomStream], TopKResult]

AUDIT_SLICE = SliceKey(report_date="2000-01", country="audit")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeighborPair:
    base: Histogram
    neighbor: Histogram
    description: str = ""

    def differing_bins(self) -> List[str]:
        keys = set(self.base.elements) | set(self.neighbor.elements)
        return sorted(
            k for k in keys if self.base.elements.get(k, 0) != self.neighbor.elements.get(k, 0)
        )

    def is_valid(self) -> bool:
        """One event apart: each bin moves by at most 1, and at most Δ bins move."""
        diffs = self.differing_bins()
        if any(
            abs(self.base.elements.get(k, 0) - self.neighbor.elements.get(k, 0)) > 1 for k in diffs
        ):
            return False
        bound = self.base.l0_bound
        return bound is None or len(diffs) <= bound


@dataclass(frozen=True)
class AuditEvent:
    description: str
    predicate: Callable[[TopKResult], bool]

    def __call__(self, result: TopKResult) -> bool:
        return self.predicate(result)


def element_released(element: str) -> AuditEvent:
    return AuditEvent(f"'{element}' released", lambda r: element in r.elements())


def element_at_rank_one(element: str) -> AuditEvent:
    return AuditEvent(
        f"'{element}' at rank 1", lambda r: bool(r.rows) and r.rows[0].element == element
    )


def output_empty() -> AuditEvent:
    return AuditEvent("output empty", lambda r: len(r) == 0)


def default_events(element: str) -> List[AuditEvent]:
    return [element_released(element), element_at_rank_one(element), output_empty()]


class AuditOutcome(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class AuditVerdict(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    event_description: str
    trials: int
    base_hits: int
    neighbor_hits: int
    p_base: float
    p_base_interval: Tuple[float, float]
    p_neighbor: float
    p_neighbor_interval: Tuple[float, float]
    epsilon_hat: float
    declared_epsilon: float
    declared_delta: float
    outcome: AuditOutcome

    @computed_field
    @property
    def passes(self) -> bool:
        return self.outcome is AuditOutcome.PASS


class SamplerVerdict(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    kind: str
    scale: float
    samples: int
    ks_statistic: float
    ks_pvalue: float
    mean: float
    expected_mean: float
    mean_se: float
    std: float
    expected_std: float
    std_se: float
    passes: bool


class FabricationVerdict(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    trials: int
    fabrications: int
    empty_outputs: int
    passes: bool


# ---------------------------------------------------------------------------
# Privacy-loss estimation
# ---------------------------------------------------------------------------


def clopper_pearson(hits: int, trials: int, confidence: float = DEFAULT_CONFIDENCE) -> Tuple[float, float]:
    """Two-sided exact binomial interval."""
    alpha = 1.0 - confidence
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2, hits, trials - hits + 1))
    hi = 1.0 if hits == trials else float(stats.beta.ppf(1 - alpha / 2, hits + 1, trials - hits))
    return lo, hi


def _log_ratio_bound(p_lo: float, p_hi: float, delta: float) -> float:
    numerator = p_lo - delta
    if numerator <= 0 or p_hi <= 0:
        return 0.0
    return max(0.0, math.log(numerator / p_hi))


def _count_hits(mechanism: Mechanism, h: Histogram, event: AuditEvent, trials: int, seed: int, parity: int) -> int:
    return sum(
        1 for t in range(trials) if event(mechanism(h, RandomStream(seed, 2 * t + parity)))
    )


def estimate_privacy_loss(
    mechanism: Mechanism,
    pair: NeighborPair,
    event: AuditEvent,
    trials: int,
    declared: Tuple[float, float],
    *,
    seed: int = 0,
    confidence: float = DEFAULT_CONFIDENCE,
) -> AuditVerdict:
    """Estimate the privacy loss of *mechanism* on *pair* for one output *event*.

    ``epsilon_hat`` is the largest ``ln((p_lo − δ) / p_hi)`` over both
    directions using interval endpoints, floored at 0.  The verdict fails
    when it exceeds the declared ε, and is inconclusive when the event was
    never observed on either side.
    """
    if trials < MIN_AUDIT_TRIALS:
        raise ValueError(f"trials must be at least {MIN_AUDIT_TRIALS}, got {trials}")
    declared_epsilon, declared_delta = declared

    base_hits = _count_hits(mechanism, pair.base, event, trials, seed, 0)
    neighbor_hits = _count_hits(mechanism, pair.neighbor, event, trials, seed, 1)
    base_ci = clopper_pearson(base_hits, trials, confidence)
    neighbor_ci = clopper_pearson(neighbor_hits, trials, confidence)

    epsilon_hat = max(
        _log_ratio_bound(base_ci[0], neighbor_ci[1], declared_delta),
        _log_ratio_bound(neighbor_ci[0], base_ci[1], declared_delta),
    )
    if base_hits == 0 and neighbor_hits == 0:
        outcome = AuditOutcome.INCONCLUSIVE
    elif epsilon_hat > declared_epsilon:
        outcome = AuditOutcome.FAIL
    else:
        outcome = AuditOutcome.PASS

    logger.info(
        "Audit %s [%s]: %d/%d vs %d/%d, epsilon_hat=%.4f (declared %g) -> %s",
        pair.description or "pair",
        event.description,
        base_hits,
        trials,
        neighbor_hits,
        trials,
        epsilon_hat,
        declared_epsilon,
        outcome.value,
    )
    return AuditVerdict(
        event_description=event.description,
        trials=trials,
        base_hits=base_hits,
        neighbor_hits=neighbor_hits,
        p_base=base_hits / trials,
        p_base_interval=base_ci,
        p_neighbor=neighbor_hits / trials,
        p_neighbor_interval=neighbor_ci,
        epsilon_hat=epsilon_hat,
        declared_epsilon=declared_epsilon,
        declared_delta=declared_delta,
        outcome=outcome,
    )


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

# (cdf, sampler, mean(scale), std(scale), kurtosis)
_SAMPLERS = {
    "laplace": (laplace_cdf, laplace_sample, lambda s: 0.0, lambda s: s * math.sqrt(2.0), 6.0),
    "gumbel": (
        gumbel_cdf,
        gumbel_sample,
        lambda s: s * np.euler_gamma,
        lambda s: s * math.pi / math.sqrt(6.0),
        5.4,
    ),
}


def check_sampler(kind: str, scale: float, samples: int, *, seed: int = 0) -> SamplerVerdict:
    """KS test against the analytic CDF plus mean/std within 3 standard errors."""
    kind = kind.lower()
    if kind not in _SAMPLERS:
        raise ValueError(f"unknown sampler '{kind}' (choose from {', '.join(_SAMPLERS)})")
    if samples < MIN_SAMPLER_SAMPLES:
        raise ValueError(f"samples must be at least {MIN_SAMPLER_SAMPLES}, got {samples}")
    cdf, sampler, mean_of, std_of, kurtosis = _SAMPLERS[kind]

    draws = sampler(RandomStream(seed, 0), scale, size=samples)
    ks = stats.kstest(draws, lambda x: cdf(x, scale))
    expected_mean, expected_std = float(mean_of(scale)), float(std_of(scale))
    mean, std = float(np.mean(draws)), float(np.std(draws, ddof=1))
    mean_se = expected_std / math.sqrt(samples)
    std_se = expected_std * math.sqrt((kurtosis - 1.0) / (4.0 * samples))
    passes = (
        ks.pvalue > KS_MIN_PVALUE
        and abs(mean - expected_mean) <= MOMENT_TOLERANCE_SE * mean_se
        and abs(std - expected_std) <= MOMENT_TOLERANCE_SE * std_se
    )
    return SamplerVerdict(
        kind=kind,
        scale=scale,
        samples=samples,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        mean=mean,
        expected_mean=expected_mean,
        mean_se=mean_se,
        std=std,
        expected_std=expected_std,
        std_se=std_se,
        passes=bool(passes),
    )


# ---------------------------------------------------------------------------
# Fabrication
# ---------------------------------------------------------------------------


def check_never_fabricates(mechanism: Mechanism, h: Histogram, trials: int, *, seed: int = 0) -> FabricationVerdict:
    if trials < MIN_AUDIT_TRIALS:
        raise ValueError(f"trials must be at least {MIN_AUDIT_TRIALS}, got {trials}")
    support = h.support
    fabrications = 0
    empty = 0
    for t in range(trials):
        released = mechanism(h, RandomStream(seed, t)).elements()
        if not released:
            empty += 1
        fabrications += sum(1 for e in released if e not in support)
    if fabrications:
        logger.warning("%d fabricated elements in %d trials.", fabrications, trials)
    return FabricationVerdict(
        trials=trials, fabrications=fabrications, empty_outputs=empty, passes=fabrications == 0
    )


# ---------------------------------------------------------------------------
# Default scenarios
# ---------------------------------------------------------------------------


def _known_laplace_topk(h: Histogram, params: PrivacyParams, stream: RandomStream) -> TopKResult:
    noisy = known_laplace(h, params, stream)
    ranked = sorted(noisy.items(), key=lambda item: (-item[1], item[0]))[: params.k]
    return TopKResult(
        mechanism=MechanismKind.KNOWN_LAPLACE,
        rows=tuple(TopKRow(element=e, noisy_count=v) for e, v in ranked),
        released_counts=True,
    )


def mechanism_under_audit(kind: MechanismKind, params: PrivacyParams) -> Mechanism:
    """Bind *params* into a black-box ``(histogram, stream) -> TopKResult``."""
    kind = MechanismKind(kind)
    if kind is MechanismKind.RTE:
        return lambda h, stream: rte_unknown_laplace_topk(h, params, stream)
    if kind is MechanismKind.RT:
        return lambda h, stream: rt_unknown_gumbel_topk(h, params, stream)
    if kind is MechanismKind.KNOWN_GUMBEL:
        return lambda h, stream: known_gumbel_topk(h, params, stream)
    return lambda h, stream: _known_laplace_topk(h, params, stream)


@dataclass(frozen=True)
class AuditScenario:
    kind: MechanismKind
    pair: NeighborPair
    params: PrivacyParams
    element: str


def _unknown(elements, l0_bound=None) -> Histogram:
    return Histogram(
        slice=AUDIT_SLICE, elements=elements, domain_kind=DomainKind.UNKNOWN, l0_bound=l0_bound
    )


def boundary_pair(kind: MechanismKind) -> AuditScenario:
    """Near-threshold neighbours for the unknown-domain mechanisms at the published parameters.

    rTE (ε=0.6, Δ=1): 'a' sits about 4 below its threshold of 39.4.
    rT (ε=0.1, k=20): 'a' sits about 14 below its threshold of 261.2, and the
    neighbour also lowers 'b' (unrestricted sensitivity).
    """
    kind = MechanismKind(kind)
    if kind is MechanismKind.RTE:
        params = PrivacyParams(epsilon=0.6, delta=1e-10, l0_sensitivity=1, fetch_limit=1000, k=20)
        pair = NeighborPair(
            base=_unknown({"a": 35, "b": 120}, l0_bound=1),
            neighbor=_unknown({"a": 34, "b": 120}, l0_bound=1),
            description="rTE boundary pair",
        )
    elif kind is MechanismKind.RT:
        params = PrivacyParams(epsilon=0.1, delta=1e-10, fetch_limit=1000, k=20)
        pair = NeighborPair(
            base=_unknown({"a": 247, "b": 400}),
            neighbor=_unknown({"a": 246, "b": 399}),
            description="rT boundary pair",
        )
    else:
        raise ValueError(f"no default boundary pair for {kind.value}")
    return AuditScenario(kind=kind, pair=pair, params=params, element="a")
