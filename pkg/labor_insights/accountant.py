"""
labor_insights/accountant.py – Privacy budget ledger under basic composition.

Every mechanism invocation a report makes is recorded as a
:class:`BudgetEntry`.  Totals are pure folds over the entries; nothing else is
stored.  When the ledger has a path, each append is also written as one JSON
line, so the file is an append-only log that :meth:`BudgetLedger.load`
reproduces exactly.

Entries carrying a ``root_seed`` are recorded once per
``(root_seed, slice, metric, mechanism)``: a seeded rerun redraws the same
noise and releases nothing new.

Per-date cost
-------------
A single hire at (country, region, industry) is counted in four reports:
country, region, country-industry and region-industry.  :func:`date_cost`
sums the entries of those four slices and takes the worst case over every
position the ledger's slices describe.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from collections import defaultdict
from datetime import date
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, Field

from schemas import Metric, SliceKey, parse_month

from .mechanisms import MechanismKind

logger = logging.getLogger(__name__)

Cost = Tuple[float, float]
EntryKey = Tuple[int, SliceKey, Metric, MechanismKind]


class BudgetEntry(BaseModel):
    model_config = {"frozen": True, "extra": "forbid"}

    slice: SliceKey
    metric: Metric
    mechanism: MechanismKind
    epsilon: float = Field(gt=0, allow_inf_nan=False)
    delta: float = Field(ge=0, lt=1)
    # True when the end-to-end guarantee depends on a non-DP pre-processing step.
    conditional: bool = False
    note: str = ""
    # Seed the noise was derived from; None for unseeded bookkeeping.
    root_seed: Optional[int] = Field(default=None, ge=0)

    @property
    def cost(self) -> Cost:
        return (self.epsilon, self.delta)

    def key(self) -> Optional[EntryKey]:
        if self.root_seed is None:
            return None
        return (self.root_seed, self.slice, self.metric, self.mechanism)


def compose_sequential(entries: Sequence[Cost]) -> Cost:
    """Basic sequential composition: ``(Σε, Σδ)``."""
    entries = list(entries)
    if not entries:
        raise ValueError("compose_sequential needs at least one (epsilon, delta) pair")
    # fsum keeps the totals independent of entry order.
    return (math.fsum(e for e, _ in entries), math.fsum(d for _, d in entries))


class BudgetLedger:
    """Append-only record of privacy expenditure.

    Parameters
    ----------
    path:
        Optional JSON-lines file; every append is written and flushed to it.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None) -> None:
        self.path = Path(path) if path is not None else None
        self._entries: List[BudgetEntry] = []
        self._keys: Set[EntryKey] = set()
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BudgetLedger":
        """Rebuild a ledger from its JSON-lines file; later appends go to the same file."""
        ledger = cls()
        path = Path(path)
        if path.exists():
            for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    entry = BudgetEntry.model_validate_json(line)
                except ValueError as exc:
                    raise ValueError(f"{path}:{line_no}: invalid ledger entry: {exc}") from exc
                ledger._entries.append(entry)
                if entry.key() is not None:
                    ledger._keys.add(entry.key())
        ledger.path = path
        return ledger

    def append(self, entry: BudgetEntry) -> bool:
        """Record *entry*; returns False when its seeded key is already present."""
        key = entry.key()
        with self._lock:
            if key is not None and key in self._keys:
                logger.debug(
                    "Ledger already holds seed %d %s/%s %s; not charged again.",
                    entry.root_seed,
                    entry.metric.value,
                    entry.mechanism.value,
                    entry.slice.label(),
                )
                return False
            if key is not None:
                self._keys.add(key)
            self._entries.append(entry)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(entry.model_dump_json() + "\n")
        logger.info(
            "Ledger +(%g, %g) %s/%s %s%s",
            entry.epsilon,
            entry.delta,
            entry.metric.value,
            entry.mechanism.value,
            entry.slice.label(),
            " [conditional]" if entry.conditional else "",
        )
        return True

    def extend(self, entries: Iterable[BudgetEntry]) -> None:
        for entry in entries:
            self.append(entry)

    def record(
        self,
        slice_key: SliceKey,
        metric: Metric,
        mechanism: MechanismKind,
        cost: Cost,
        conditional: bool = False,
        note: str = "",
        root_seed: Optional[int] = None,
    ) -> BudgetEntry:
        entry = BudgetEntry(
            slice=slice_key,
            metric=metric,
            mechanism=mechanism,
            epsilon=cost[0],
            delta=cost[1],
            conditional=conditional,
            note=note,
            root_seed=root_seed,
        )
        self.append(entry)
        return entry

    @property
    def entries(self) -> Tuple[BudgetEntry, ...]:
        """Snapshot of the entries appended so far."""
        with self._lock:
            return tuple(self._entries)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# Folds
# ---------------------------------------------------------------------------


def _positions(entries: Sequence[BudgetEntry]) -> List[Tuple[str, Optional[str], Optional[str]]]:
    regions: Dict[str, Set[str]] = {}
    industries: Dict[str, Set[str]] = {}
    for entry in entries:
        s = entry.slice
        regions.setdefault(s.country, set())
        industries.setdefault(s.country, set())
        if s.region:
            regions[s.country].add(s.region)
        if s.industry:
            industries[s.country].add(s.industry)
    positions = []
    for country in sorted(regions):
        for region in sorted(regions[country]) or [None]:
            for industry in sorted(industries[country]) or [None]:
                positions.append((country, region, industry))
    return positions


def _covers(s: SliceKey, position: Tuple[str, Optional[str], Optional[str]]) -> bool:
    country, region, industry = position
    return (
        s.country == country
        and (s.region is None or s.region == region)
        and (s.industry is None or s.industry == industry)
    )


def date_cost(ledger: BudgetLedger, report_date: Union[date, str], metric: Metric) -> Cost:
    """Worst-case cost, for one date and metric, to a single hire."""
    month = parse_month(report_date)
    metric = Metric(metric)
    entries = [e for e in ledger.entries if e.slice.report_date == month and e.metric is metric]
    if not entries:
        return (0.0, 0.0)
    worst: Cost = (0.0, 0.0)
    for position in _positions(entries):
        covering = [e.cost for e in entries if _covers(e.slice, position)]
        if not covering:
            continue
        cost = compose_sequential(covering)
        if cost > worst:
            worst = cost
    return worst


def report_costs(ledger: BudgetLedger) -> Dict[Tuple[str, str, str], Cost]:
    """(month, slice label, metric) → composed cost of that report's entries."""
    grouped: Dict[Tuple[str, str, str], List[Cost]] = defaultdict(list)
    for entry in ledger.entries:
        grouped[(entry.slice.month, entry.slice.label(), entry.metric.value)].append(entry.cost)
    return {key: compose_sequential(costs) for key, costs in sorted(grouped.items())}


def total_cost(ledger: BudgetLedger) -> Cost:
    """Plain Σ over every entry (a ledger fold, not a per-hire guarantee)."""
    entries = ledger.entries
    if not entries:
        return (0.0, 0.0)
    return compose_sequential([e.cost for e in entries])


def budget_summary(ledger: BudgetLedger) -> Dict[str, Any]:
    """Per-date, per-metric worst-case totals, ready for ``json.dumps``."""
    entries = ledger.entries
    dates = sorted({e.slice.month for e in entries})
    summary: Dict[str, Any] = {"dates": {}, "entries": len(entries)}
    for month in dates:
        per_metric: Dict[str, Any] = {}
        for metric in Metric:
            relevant = [e for e in entries if e.slice.month == month and e.metric is metric]
            if not relevant:
                continue
            epsilon, delta = date_cost(ledger, month, metric)
            per_metric[metric.value] = {
                "epsilon": epsilon,
                "delta": delta,
                "reports": len({e.slice for e in relevant}),
                "conditional": any(e.conditional for e in relevant),
            }
        summary["dates"][month] = per_metric
    return summary


def summary_to_json(summary: Dict[str, Any]) -> str:
    return json.dumps(summary, indent=2) + "\n"
