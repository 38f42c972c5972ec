"""
schemas/histogram.py – Per-slice distinct-count histogram.

Counts are distinct-member counts, so one protected event moves any single
bin by at most 1 (``linf_bound`` is fixed at 1).  ``l0_bound`` is the number
of bins one event may touch; ``None`` means unrestricted.

Construction only checks types.  The semantic invariants are reported as
data by :func:`validate_histogram` so that broken histograms can still be
built, inspected and audited.
"""

from __future__ import annotations

from enum import Enum
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, PositiveInt, StrictInt

from .slice_key import SliceKey


class DomainKind(str, Enum):
    KNOWN = "known"
    UNKNOWN = "unknown"


class Histogram(BaseModel):
    """Element id → distinct count for one slice."""

    model_config = {"frozen": True, "extra": "forbid"}

    slice: SliceKey
    elements: Dict[str, StrictInt] = Field(default_factory=dict)
    domain_kind: DomainKind
    # Declared universe; required for known-domain histograms.
    domain: Optional[Tuple[str, ...]] = None
    l0_bound: Optional[PositiveInt] = None
    linf_bound: Literal[1] = 1

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def support(self) -> FrozenSet[str]:
        """Elements with a strictly positive count."""
        return frozenset(e for e, c in self.elements.items() if c > 0)

    def with_elements(self, elements: Dict[str, int], **updates) -> "Histogram":
        """Return a copy carrying *elements* (and any other field *updates*)."""
        data = self.model_dump()
        data.update(updates)
        data["elements"] = dict(elements)
        return Histogram.model_validate(data)


def validate_histogram(h: Histogram) -> List[str]:
    """Return every invariant breach of *h*; an empty list means valid."""
    violations: List[str] = []
    for element in sorted(h.elements):
        count = h.elements[element]
        if count < 0:
            violations.append(f"negative count for element '{element}': {count}")
        elif count == 0 and h.domain_kind is DomainKind.UNKNOWN:
            violations.append(f"zero count in unknown domain for element '{element}'")

    if h.domain_kind is DomainKind.KNOWN:
        if h.domain is None:
            violations.append("known domain histogram has no declared domain")
        else:
            declared = set(h.domain)
            present = set(h.elements)
            if declared != present:
                missing = sorted(declared - present)
                extra = sorted(present - declared)
                violations.append(
                    f"domain mismatch in known domain (missing: {missing}, extra: {extra})"
                )
    return violations
