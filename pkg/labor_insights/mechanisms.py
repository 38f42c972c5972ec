"""
labor_insights/mechanisms.py – DP top-k mechanisms for distinct-count histograms.

                    Δ-restricted sensitivity     unrestricted sensitivity
    known domain    known_laplace                known_gumbel_topk
    unknown domain  rte_unknown_laplace_topk     rt_unknown_gumbel_topk

All four are pure functions of (histogram, params, stream).  Noise is drawn
in lexicographic element-id order, threshold noise first, so a fixed stream
assigns each element the same draw whatever the counts are.  Noise scales
are obtained only through the ``*_scale`` helpers.

Truncation to the d̄ largest counts is done by the caller
(:func:`labor_insights.ingest.truncate_top_dbar`); the thresholds do not
depend on what was dropped.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from schemas import DomainKind, Histogram, PrivacyParams

from .errors import MechanismError
from .noise import RandomStream, gumbel_sample, laplace_sample

logger = logging.getLogger(__name__)


class MechanismKind(str, Enum):
    KNOWN_LAPLACE = "known_laplace"
    KNOWN_GUMBEL = "known_gumbel"
    RTE = "rte"
    RT = "rt"


class TopKRow(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    element: str
    noisy_count: Optional[float] = None


class TopKResult(BaseModel):
    """Selected elements, best first, with noisy counts when they are released."""

    model_config = {"frozen": True, "extra": "forbid"}

    mechanism: MechanismKind
    rows: Tuple[TopKRow, ...] = ()
    released_counts: bool

    @model_validator(mode="after")
    def _counts_match_flag(self) -> "TopKResult":
        for row in self.rows:
            if self.released_counts and row.noisy_count is None:
                raise ValueError("released_counts=True requires a noisy count on every row")
            if not self.released_counts and row.noisy_count is not None:
                raise ValueError("released_counts=False forbids noisy counts")
        return self

    def elements(self) -> List[str]:
        return [row.element for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Scales and thresholds
# ---------------------------------------------------------------------------


def _require_l0(params: PrivacyParams) -> int:
    if params.l0_sensitivity is None:
        raise MechanismError("this mechanism needs an l0 sensitivity bound Δ")
    return params.l0_sensitivity


def laplace_scale(params: PrivacyParams) -> float:
    """Δ/ε."""
    return _require_l0(params) / params.epsilon


def gumbel_topk_scale(params: PrivacyParams) -> float:
    """k/ε: one-shot Gumbel equal to k exponential-mechanism rounds at ε/k."""
    return params.k / params.epsilon


def gumbel_threshold_scale(params: PrivacyParams) -> float:
    """1/ε."""
    return 1.0 / params.epsilon


def _require_delta(params: PrivacyParams) -> float:
    if params.delta <= 0:
        raise MechanismError("unknown-domain mechanisms need delta > 0")
    return params.delta


def rte_threshold(params: PrivacyParams) -> float:
    """Deterministic part of the rTE threshold: ``1 + (Δ/ε)·ln(Δ/δ)``."""
    l0 = _require_l0(params)
    delta = _require_delta(params)
    return 1.0 + (l0 / params.epsilon) * math.log(l0 / delta)


def rt_threshold(params: PrivacyParams) -> float:
    """Deterministic part of the rT threshold: ``1 + (1/ε)·ln(k/δ)``."""
    delta = _require_delta(params)
    return 1.0 + math.log(params.k / delta) / params.epsilon


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _require_kind(h: Histogram, kind: DomainKind, name: str) -> None:
    if h.domain_kind is not kind:
        raise MechanismError(f"{name} needs a {kind.value}-domain histogram, got {h.domain_kind.value}")


def _require_within_fetch_limit(h: Histogram, params: PrivacyParams) -> None:
    if len(h) > params.fetch_limit:
        raise MechanismError(
            f"histogram has {len(h)} elements but fetch_limit is {params.fetch_limit}; "
            "truncate to the top d̄ first"
        )


def _ordered(h: Histogram) -> Tuple[List[str], np.ndarray]:
    elements = sorted(h.elements)
    counts = np.fromiter((h.elements[e] for e in elements), dtype=np.int64, count=len(elements))
    return elements, counts


def _rank(elements: Sequence[str], scores: np.ndarray, keep: np.ndarray, k: int) -> List[int]:
    """Indices of at most *k* kept elements, by score desc then element id."""
    candidates = [i for i in range(len(elements)) if keep[i]]
    candidates.sort(key=lambda i: (-scores[i], elements[i]))
    return candidates[:k]


# ---------------------------------------------------------------------------
# Known domain
# ---------------------------------------------------------------------------


def known_laplace(h: Histogram, params: PrivacyParams, stream: RandomStream) -> Dict[str, float]:
    """Add independent Laplace(Δ/ε) noise to every count; ε-DP."""
    _require_kind(h, DomainKind.KNOWN, "known_laplace")
    if params.delta != 0:
        raise MechanismError("known_laplace is a pure ε-DP release; params.delta must be 0")
    scale = laplace_scale(params)
    elements, counts = _ordered(h)
    if not elements:
        return {}
    noisy = counts + laplace_sample(stream, scale, size=len(elements))
    logger.debug("known_laplace released %d noisy counts (scale %.4f).", len(elements), scale)
    return {e: float(v) for e, v in zip(elements, noisy)}


def known_gumbel_topk(h: Histogram, params: PrivacyParams, stream: RandomStream) -> TopKResult:
    """One-shot Gumbel top-k over a known domain; counts withheld."""
    _require_kind(h, DomainKind.KNOWN, "known_gumbel_topk")
    if params.k > len(h):
        raise MechanismError(f"k ({params.k}) exceeds the domain size ({len(h)})")
    scale = gumbel_topk_scale(params)
    elements, counts = _ordered(h)
    scores = counts + gumbel_sample(stream, scale, size=len(elements))
    chosen = _rank(elements, scores, np.ones(len(elements), dtype=bool), params.k)
    return TopKResult(
        mechanism=MechanismKind.KNOWN_GUMBEL,
        rows=tuple(TopKRow(element=elements[i]) for i in chosen),
        released_counts=False,
    )


# ---------------------------------------------------------------------------
# Unknown domain
# ---------------------------------------------------------------------------


def rte_unknown_laplace_topk(
    top_dbar: Histogram, params: PrivacyParams, stream: RandomStream
) -> TopKResult:
    """Laplace top-k above a noisy threshold over an unknown domain; (ε, δ)-DP.

    Releases at most k elements whose noisy count strictly exceeds the noisy
    threshold, with their noisy counts.
    """
    _require_kind(top_dbar, DomainKind.UNKNOWN, "rte_unknown_laplace_topk")
    _require_within_fetch_limit(top_dbar, params)
    scale = laplace_scale(params)
    threshold = rte_threshold(params)
    noisy_threshold = threshold + laplace_sample(stream, scale)
    elements, counts = _ordered(top_dbar)
    if not elements:
        return TopKResult(mechanism=MechanismKind.RTE, rows=(), released_counts=True)
    noisy = counts + laplace_sample(stream, scale, size=len(elements))
    chosen = _rank(elements, noisy, noisy > noisy_threshold, params.k)
    logger.debug("rTE kept %d of %d elements.", len(chosen), len(elements))
    return TopKResult(
        mechanism=MechanismKind.RTE,
        rows=tuple(TopKRow(element=elements[i], noisy_count=float(noisy[i])) for i in chosen),
        released_counts=True,
    )


def rt_unknown_gumbel_topk(
    top_dbar: Histogram, params: PrivacyParams, stream: RandomStream
) -> TopKResult:
    """Gumbel top-k above a noisy threshold over an unknown domain; rank only."""
    _require_kind(top_dbar, DomainKind.UNKNOWN, "rt_unknown_gumbel_topk")
    _require_within_fetch_limit(top_dbar, params)
    scale = gumbel_threshold_scale(params)
    threshold = rt_threshold(params)
    noisy_threshold = threshold + gumbel_sample(stream, scale)
    elements, counts = _ordered(top_dbar)
    if not elements:
        return TopKResult(mechanism=MechanismKind.RT, rows=(), released_counts=False)
    scores = counts + gumbel_sample(stream, scale, size=len(elements))
    chosen = _rank(elements, scores, scores > noisy_threshold, params.k)
    logger.debug("rT kept %d of %d elements.", len(chosen), len(elements))
    return TopKResult(
        mechanism=MechanismKind.RT,
        rows=tuple(TopKRow(element=elements[i]) for i in chosen),
        released_counts=False,
    )
