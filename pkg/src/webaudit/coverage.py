"""Per-category tracker coverage and the q-threshold niche-tracker filter."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Sequence, Set, Tuple

from .chains import InclusionTree

GRANULARITY_FULL = "full"
GRANULARITY_ETLD1 = "etld1"


@dataclass(frozen=True)
class SitePresence:
    """Trackers observed on one site, at any inclusion level."""

    site: str  # identity; duplicates of the same site merge
    trackers: FrozenSet[str]


def site_presence(
    site: str, tree: InclusionTree, granularity: str = GRANULARITY_ETLD1
) -> SitePresence:
    if granularity == GRANULARITY_ETLD1:
        trackers = frozenset(node.etld1 for node in tree.nodes)
    elif granularity == GRANULARITY_FULL:
        trackers = frozenset(node.domain for node in tree.nodes)
    else:
        raise ValueError(f"unknown granularity {granularity!r}")
    return SitePresence(site=site, trackers=trackers)


@dataclass(frozen=True)
class CoverageEntry:
    tracker: str
    category: str
    cat_percent: float
    other_percent: float
    cat_sites: int  # denominator inside the category
    other_sites: int  # denominator over everything else


@dataclass(frozen=True)
class NicheFilterConfig:
    """q is the maximum tolerated coverage outside the category, in percent."""

    q: float
    top_n: int = 10
    domain_granularity: str = GRANULARITY_ETLD1

    def __post_init__(self) -> None:
        if self.q < 0:
            raise ValueError("q must be >= 0")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")
        if self.domain_granularity not in (GRANULARITY_FULL, GRANULARITY_ETLD1):
            raise ValueError(f"unknown granularity {self.domain_granularity!r}")


def _dedupe(sites: Sequence[SitePresence]) -> Dict[str, Set[str]]:
    merged: Dict[str, Set[str]] = {}
    for presence in sites:
        merged.setdefault(presence.site, set()).update(presence.trackers)
    return merged


def tracker_coverage(
    corpus_by_category: Mapping[str, Sequence[SitePresence]],
    tracker: str,
    category: str,
) -> CoverageEntry:
    """Share of category sites carrying the tracker vs its share everywhere else."""
    if category not in corpus_by_category or not corpus_by_category[category]:
        raise ValueError(f"empty category {category!r}")
    cat_sites = _dedupe(corpus_by_category[category])
    other_sites: Dict[str, Set[str]] = _dedupe(
        [
            presence
            for name, sites in corpus_by_category.items()
            if name != category
            for presence in sites
        ]
    )
    cat_hits = sum(1 for trackers in cat_sites.values() if tracker in trackers)
    other_hits = sum(1 for trackers in other_sites.values() if tracker in trackers)
    return CoverageEntry(
        tracker=tracker,
        category=category,
        cat_percent=100.0 * cat_hits / len(cat_sites),
        other_percent=100.0 * other_hits / len(other_sites) if other_sites else 0.0,
        cat_sites=len(cat_sites),
        other_sites=len(other_sites),
    )


def niche_trackers(
    corpus_by_category: Mapping[str, Sequence[SitePresence]],
    category: str,
    config: NicheFilterConfig,
) -> List[CoverageEntry]:
    """Top category-skewed trackers: everything above q outside the category drops."""
    if category not in corpus_by_category or not corpus_by_category[category]:
        raise ValueError(f"empty category {category!r}")
    candidates: Set[str] = set()
    for presence in corpus_by_category[category]:
        candidates.update(presence.trackers)
    entries = [
        tracker_coverage(corpus_by_category, tracker, category)
        for tracker in sorted(candidates)
    ]
    kept = [entry for entry in entries if entry.other_percent <= config.q]
    kept.sort(key=lambda entry: (-entry.cat_percent, entry.tracker))
    return kept[: config.top_n]
