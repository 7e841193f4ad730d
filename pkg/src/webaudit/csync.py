"""Cookie-synchronization detection between third parties, plus aggregates."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
)
from urllib.parse import parse_qsl, unquote, urlsplit

from .chains import ALL_SENSITIVE, TOPK_CATEGORY, InclusionTree, url_host
from .psl import PublicSuffixList, etld1
from .records import CrawlRecord

OVERALL = "Overall"

# An argument value is treated as an opaque identifier blob only when it is
# long, stays inside the token alphabet, carries no known keyword, and looks
# close to uniformly random.
_MIN_BLOB_LENGTH = 16
_MIN_ENTROPY_BITS_PER_CHAR = 3.5
_BLOB_ALPHABET = frozenset(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789+/=_-"
)


@dataclass(frozen=True)
class CSyncKeywordList:
    """Ordered, deduplicated, lowercase tokens; order decides match reporting."""

    keywords: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("keyword list must be non-empty")
        seen: Set[str] = set()
        for keyword in self.keywords:
            if keyword != keyword.lower():
                raise ValueError(f"keyword not lowercase: {keyword!r}")
            if keyword in seen:
                raise ValueError(f"duplicate keyword: {keyword!r}")
            seen.add(keyword)

    @classmethod
    def load_lines(cls, lines: Iterable[str]) -> "CSyncKeywordList":
        keywords: List[str] = []
        seen: Set[str] = set()
        for line in lines:
            word = line.strip().lower()
            if not word or word.startswith("#"):
                continue
            if word not in seen:
                seen.add(word)
                keywords.append(word)
        return cls(keywords=tuple(keywords))

    @classmethod
    def default(cls) -> "CSyncKeywordList":
        text = (
            resources.files("webaudit.data")
            .joinpath("csync_keywords.txt")
            .read_text(encoding="utf-8")
        )
        return cls.load_lines(text.splitlines())


@dataclass(frozen=True)
class CSyncEvent:
    site: str  # first-party eTLD+1
    source_etld1: str
    dest_etld1: str
    matched_keyword: str
    request_seq: int
    url: str


def has_url_arguments(url: str) -> bool:
    """True iff the query component holds at least one key, valued or not."""
    try:
        query = urlsplit(url).query
    except ValueError:
        return False
    return bool(parse_qsl(query, keep_blank_values=True))


def _entropy_bits_per_char(value: str) -> float:
    counts = Counter(value)
    n = len(value)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


def is_obfuscated(value: str, keywords: Sequence[str] = ()) -> bool:
    """Heuristic for encoded/encrypted identifier blobs; deliberately conservative."""
    if len(value) < _MIN_BLOB_LENGTH:
        return False
    if any(ch not in _BLOB_ALPHABET for ch in value):
        return False
    lowered = value.lower()
    if any(keyword in lowered for keyword in keywords):
        return False
    return _entropy_bits_per_char(value) >= _MIN_ENTROPY_BITS_PER_CHAR


def detect_csync(
    record: CrawlRecord,
    tree: InclusionTree,
    keywords: CSyncKeywordList,
    psl: PublicSuffixList,
    warnings: Optional[List[str]] = None,
) -> List[CSyncEvent]:
    """Identifier-sharing requests between two distinct third parties.

    A candidate request originates from a third party already present in the
    inclusion tree and targets a different third party. It becomes an event
    when it carries URL arguments and a keyword matches the lowercased path, an
    argument key, or a non-obfuscated argument value. A keyword match on a key
    whose values are all obfuscated is voided; at most one event per request
    (first keyword in list order wins).
    """
    root = tree.root
    node_etld1s = {node.etld1 for node in tree.nodes}
    events: List[CSyncEvent] = []
    for request in record.requests:
        if request.request_type == "document" or not request.initiator_url:
            continue
        source_host = url_host(request.initiator_url)
        if source_host is None:
            continue
        source = etld1(source_host, psl)
        if source == root or source not in node_etld1s:
            continue
        dest_host = url_host(request.url)
        if dest_host is None:
            continue
        dest = etld1(dest_host, psl)
        if dest == root or dest == source:
            continue

        try:
            parts = urlsplit(request.url)
        except ValueError:
            if warnings is not None:
                warnings.append(request.url)
            continue
        args = parse_qsl(parts.query, keep_blank_values=True)
        if not args:
            continue
        path = unquote(parts.path).lower()
        by_key: Dict[str, List[str]] = {}
        for key, value in args:
            by_key.setdefault(key.lower(), []).append(value)
        clean_values = [
            value.lower()
            for _, value in args
            if not is_obfuscated(value, keywords.keywords)
        ]

        matched: Optional[str] = None
        for keyword in keywords.keywords:
            if keyword in path:
                matched = keyword
                break
            key_hit = False
            for key, values in by_key.items():
                if keyword in key and not all(
                    is_obfuscated(value, keywords.keywords) for value in values
                ):
                    key_hit = True
                    break
            if key_hit:
                matched = keyword
                break
            if any(keyword in value for value in clean_values):
                matched = keyword
                break
        if matched is not None:
            events.append(
                CSyncEvent(
                    site=root,
                    source_etld1=source,
                    dest_etld1=dest,
                    matched_keyword=matched,
                    request_seq=request.seq,
                    url=request.url,
                )
            )
    return events


@dataclass(frozen=True)
class CSyncCategoryStats:
    category: str
    n_websites: int
    n_domains: int  # distinct third-party eTLD+1 seen in the group
    n_websites_with_csync: int
    pct_websites_with_csync: float
    n_requests: int
    n_csync_requests: int
    pct_csync_requests: float
    n_unique_pairs: int  # unordered {source, dest} pairs
    n_niche_pairs: int
    pct_niche_pairs: float


SiteEntry = Tuple[CrawlRecord, InclusionTree, str, Sequence[CSyncEvent]]


def _stats_row(
    category: str,
    sites: Sequence[Tuple[CrawlRecord, InclusionTree, Sequence[CSyncEvent]]],
    niche: Set[str],
) -> CSyncCategoryStats:
    domains: Set[str] = set()
    pairs: Set[FrozenSet[str]] = set()
    with_csync = 0
    n_requests = 0
    n_csync = 0
    for record, tree, events in sites:
        domains.update(node.etld1 for node in tree.nodes)
        n_requests += len(record.requests)
        n_csync += len(events)
        if events:
            with_csync += 1
        for event in events:
            pairs.add(frozenset((event.source_etld1, event.dest_etld1)))
    niche_pairs = sum(1 for pair in pairs if pair & niche)
    n_websites = len(sites)
    return CSyncCategoryStats(
        category=category,
        n_websites=n_websites,
        n_domains=len(domains),
        n_websites_with_csync=with_csync,
        pct_websites_with_csync=100.0 * with_csync / n_websites if n_websites else 0.0,
        n_requests=n_requests,
        n_csync_requests=n_csync,
        pct_csync_requests=100.0 * n_csync / n_requests if n_requests else 0.0,
        n_unique_pairs=len(pairs),
        n_niche_pairs=niche_pairs,
        pct_niche_pairs=100.0 * niche_pairs / len(pairs) if pairs else 0.0,
    )


def csync_stats(
    corpus: Sequence[SiteEntry],
    niche_lists: Mapping[str, Set[str]],
    topk_label: str = TOPK_CATEGORY,
) -> List[CSyncCategoryStats]:
    """Rows per category (sorted), the non-TopK aggregate, and the overall total."""
    groups: Dict[str, List[Tuple[CrawlRecord, InclusionTree, Sequence[CSyncEvent]]]] = {}
    sensitive: List[Tuple[CrawlRecord, InclusionTree, Sequence[CSyncEvent]]] = []
    everything: List[Tuple[CrawlRecord, InclusionTree, Sequence[CSyncEvent]]] = []
    for record, tree, category, events in corpus:
        entry = (record, tree, events)
        groups.setdefault(category, []).append(entry)
        everything.append(entry)
        if category != topk_label:
            sensitive.append(entry)
    union_niche: Set[str] = set()
    for trackers in niche_lists.values():
        union_niche.update(trackers)
    rows = [
        _stats_row(category, groups[category], set(niche_lists.get(category, set())))
        for category in sorted(groups)
    ]
    if sensitive:
        rows.append(_stats_row(ALL_SENSITIVE, sensitive, union_niche))
    if everything:
        rows.append(_stats_row(OVERALL, everything, union_niche))
    return rows
