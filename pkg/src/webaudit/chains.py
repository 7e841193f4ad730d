"""Third-party inclusion trees, inclusion chains, and presence statistics."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
from urllib.parse import urlsplit

from .psl import PublicSuffixList, etld1
from .records import CrawlRecord

__all__ = [
    "ALL_SENSITIVE",
    "CategoryStats",
    "InclusionTree",
    "PublicSuffixList",
    "TOPK_CATEGORY",
    "TreeNode",
    "build_inclusion_tree",
    "category_stats",
    "enumerate_chains",
    "etld1",
    "hop_distribution",
    "third_party_requests",
    "url_host",
]

# Marker for the non-sensitive control category; everything else aggregates
# into the "All Sensitive" row.
TOPK_CATEGORY = "TopK"
ALL_SENSITIVE = "All Sensitive"


def url_host(url: str) -> Optional[str]:
    """Network host of a URL, lowercased, or None for host-less schemes."""
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return host or None


@dataclass(frozen=True)
class TreeNode:
    """One third-party inclusion; identity within a tree is (domain, level)."""

    domain: str
    etld1: str
    level: int
    parent_index: int  # index into InclusionTree.nodes; -1 when the parent is the root
    via_request: int  # seq of the request that first created this node


@dataclass(frozen=True)
class InclusionTree:
    root: str  # first-party eTLD+1, the unique level-0 entity
    nodes: Tuple[TreeNode, ...]
    unattributed: int  # requests attached at level 1 for lack of a resolvable initiator

    def max_level(self) -> int:
        return max((node.level for node in self.nodes), default=0)


def build_inclusion_tree(record: CrawlRecord, psl: PublicSuffixList) -> InclusionTree:
    """Attach each third-party request under its initiator's earliest inclusion.

    First-party subresources never become nodes. A third-party initiator maps
    to the existing node sharing its eTLD+1 at the smallest level (earliest
    created on ties); requests whose initiator is missing or unknown fall back
    to level 1 and are tallied as unattributed.
    """
    root_host = url_host(record.final_url)
    if root_host is None:
        raise ValueError(f"final_url has no network host: {record.final_url!r}")
    root = etld1(root_host, psl)

    nodes: List[TreeNode] = []
    by_identity: Dict[Tuple[str, int], int] = {}
    best_by_etld1: Dict[str, int] = {}  # smallest-level node per third-party eTLD+1
    unattributed = 0

    for request in record.requests:
        if request.request_type == "document":
            continue
        dest_host = url_host(request.url)
        if dest_host is None:
            continue
        dest_etld1 = etld1(dest_host, psl)
        if dest_etld1 == root:
            continue

        parent_index = -1
        level = 1
        init_host = url_host(request.initiator_url) if request.initiator_url else None
        if init_host is None:
            unattributed += 1
        else:
            init_etld1 = etld1(init_host, psl)
            if init_etld1 != root:
                parent = best_by_etld1.get(init_etld1)
                if parent is None:
                    unattributed += 1
                else:
                    parent_index = parent
                    level = nodes[parent].level + 1

        identity = (dest_host, level)
        if identity in by_identity:
            continue
        index = len(nodes)
        nodes.append(TreeNode(dest_host, dest_etld1, level, parent_index, request.seq))
        by_identity[identity] = index
        best = best_by_etld1.get(dest_etld1)
        if best is None or level < nodes[best].level:
            best_by_etld1[dest_etld1] = index

    return InclusionTree(root=root, nodes=tuple(nodes), unattributed=unattributed)


def enumerate_chains(tree: InclusionTree) -> List[Tuple[str, ...]]:
    """Root-to-leaf domain paths, depth-first in node creation order."""
    children: Dict[int, List[int]] = {index: [] for index in range(-1, len(tree.nodes))}
    for index, node in enumerate(tree.nodes):
        children[node.parent_index].append(index)

    chains: List[Tuple[str, ...]] = []
    stack: List[Tuple[int, Tuple[str, ...]]] = [(-1, (tree.root,))]
    while stack:
        index, path = stack.pop()
        kids = children[index]
        if index >= 0 and not kids:
            chains.append(path)
            continue
        for kid in reversed(kids):
            stack.append((kid, path + (tree.nodes[kid].domain,)))
    return chains


def third_party_requests(
    record: CrawlRecord, root: str, psl: PublicSuffixList
) -> List[Tuple[str, str]]:
    """(host, eTLD+1) per non-document request whose destination leaves the first party."""
    out: List[Tuple[str, str]] = []
    for request in record.requests:
        if request.request_type == "document":
            continue
        host = url_host(request.url)
        if host is None:
            continue
        domain = etld1(host, psl)
        if domain != root:
            out.append((host, domain))
    return out


@dataclass(frozen=True)
class CategoryStats:
    """Per-site third-party presence distribution for one category of sites."""

    category: str
    n_websites: int
    total_requests: int
    requests_median: float
    requests_mean: float
    requests_std: float
    full_domains_median: float
    full_domains_mean: float
    full_domains_std: float
    etld1_domains_median: float
    etld1_domains_mean: float
    etld1_domains_std: float


def _stats_row(category: str, counts: Sequence[Tuple[int, int, int]]) -> CategoryStats:
    requests = [c[0] for c in counts]
    fulls = [c[1] for c in counts]
    etld1s = [c[2] for c in counts]
    return CategoryStats(
        category=category,
        n_websites=len(counts),
        total_requests=sum(requests),
        requests_median=statistics.median_low(requests),
        requests_mean=statistics.fmean(requests),
        requests_std=statistics.pstdev(requests),
        full_domains_median=statistics.median_low(fulls),
        full_domains_mean=statistics.fmean(fulls),
        full_domains_std=statistics.pstdev(fulls),
        etld1_domains_median=statistics.median_low(etld1s),
        etld1_domains_mean=statistics.fmean(etld1s),
        etld1_domains_std=statistics.pstdev(etld1s),
    )


def category_stats(
    corpus: Sequence[Tuple[CrawlRecord, InclusionTree, str]],
    psl: PublicSuffixList,
    topk_label: str = TOPK_CATEGORY,
) -> List[CategoryStats]:
    """One row per category (sorted by name) plus the non-TopK aggregate.

    Medians use the lower median; std is the population standard deviation.
    """
    if not corpus:
        raise ValueError("category_stats needs a non-empty corpus")
    groups: Dict[str, List[Tuple[int, int, int]]] = {}
    sensitive: List[Tuple[int, int, int]] = []
    for record, tree, category in corpus:
        tps = third_party_requests(record, tree.root, psl)
        counts = (len(tps), len({h for h, _ in tps}), len({d for _, d in tps}))
        groups.setdefault(category, []).append(counts)
        if category != topk_label:
            sensitive.append(counts)
    rows = [_stats_row(category, groups[category]) for category in sorted(groups)]
    if sensitive:
        rows.append(_stats_row(ALL_SENSITIVE, sensitive))
    return rows


def hop_distribution(
    trees: Sequence[InclusionTree], tracker_etld1: str
) -> Tuple[float, Dict[int, float]]:
    """Site coverage and hop histogram for one tracker eTLD+1.

    Level 1 is reported as hop 0 (direct inclusion by the first party).
    Percentages are over all node occurrences of the tracker and sum to 100
    whenever the tracker is observed at all.
    """
    if not trees:
        raise ValueError("hop_distribution needs a non-empty corpus")
    sites_with = 0
    level_counts: Dict[int, int] = {}
    for tree in trees:
        hit = False
        for node in tree.nodes:
            if node.etld1 == tracker_etld1:
                hit = True
                hop = node.level - 1
                level_counts[hop] = level_counts.get(hop, 0) + 1
        if hit:
            sites_with += 1
    coverage = 100.0 * sites_with / len(trees)
    total = sum(level_counts.values())
    hops = {hop: 100.0 * count / total for hop, count in sorted(level_counts.items())}
    return coverage, hops
