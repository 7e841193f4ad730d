"""Independent reference implementations used as test oracles.

Every function here recomputes a pipeline quantity from first principles with
deliberately different machinery (regex instead of a streaming parser, direct
probability products instead of log-space sums, linear scans instead of index
maps) so that agreement with the library is evidence, not tautology.
"""

from __future__ import annotations

import math
import re
from html import unescape
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Set, Tuple
from urllib.parse import parse_qsl, unquote, urlsplit


# -- text extraction ----------------------------------------------------------


_SKIP_BLOCK = ("script", "style", "noscript", "template")


def visible_text_reference(html: str) -> str:
    """Regex-based text extraction for well-formed fixture markup only."""
    html = re.sub(r"<!--.*?-->", "", html, flags=re.S)
    for tag in _SKIP_BLOCK:
        html = re.sub(rf"<{tag}\b[^>]*>.*?</{tag}\s*>", "", html, flags=re.S | re.I)
    text = re.sub(r"<[^>]*>", "", html)
    return " ".join(unescape(text).split())


def meta_text_reference(html: str) -> str:
    """Title plus whitelisted meta content, in document order; fixtures only."""
    whitelist = {
        "description",
        "keywords",
        "og:title",
        "og:description",
        "twitter:title",
        "twitter:description",
    }
    pieces: List[Tuple[int, str]] = []
    title = re.search(r"<title[^>]*>(.*?)</title\s*>", html, flags=re.S | re.I)
    if title:
        pieces.append((title.start(), title.group(1)))
    for match in re.finditer(r"<meta\b([^>]*)>", html, flags=re.I):
        attrs = dict(
            (name.lower(), value)
            for name, value in re.findall(
                r'([\w:-]+)\s*=\s*"([^"]*)"', match.group(1)
            )
        )
        key = attrs.get("name", attrs.get("property", "")).lower()
        if key in whitelist and "content" in attrs:
            pieces.append((match.start(), attrs["content"]))
    pieces.sort()
    return " ".join(" ".join(text for _, text in pieces).split())


def tokens_reference(text: str) -> List[str]:
    """Character-class grouping tokenizer."""
    out: List[str] = []
    for is_word, group in groupby(
        text.lower(), key=lambda ch: ch.isalpha() or ch in "0123456789"
    ):
        if is_word:
            token = "".join(group)
            if len(token) >= 3:
                out.append(token)
    return out


# -- feature engineering -------------------------------------------------------


def df_reference(corpus: Sequence[Sequence[str]]) -> Dict[str, int]:
    df: Dict[str, int] = {}
    for terms in corpus:
        for term in sorted(set(terms)):
            df[term] = df.get(term, 0) + 1
    return df


def top_terms_reference(corpus: Sequence[Sequence[str]], k: int) -> List[Tuple[str, int]]:
    df = df_reference(corpus)
    ranked = sorted(df.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def bow_reference(terms: Sequence[str], vocab_terms: Sequence[str]) -> Dict[int, float]:
    positions = {term: i for i, term in enumerate(vocab_terms)}
    counts: Dict[int, float] = {}
    for term in terms:
        if term in positions:
            counts[positions[term]] = counts.get(positions[term], 0.0) + 1.0
    return counts


def idf_reference(doc_term_lists: Sequence[Sequence[str]], vocab_terms: Sequence[str]) -> List[float]:
    n = len(doc_term_lists)
    values = []
    for term in vocab_terms:
        df = sum(1 for terms in doc_term_lists if term in terms)
        values.append(math.log((1 + n) / (1 + df)) + 1.0)
    return values


def tfidf_reference(
    terms: Sequence[str], vocab_terms: Sequence[str], idf: Sequence[float]
) -> Dict[int, float]:
    weighted = {
        fid: count * idf[fid] for fid, count in bow_reference(terms, vocab_terms).items()
    }
    norm = math.sqrt(sum(w * w for w in weighted.values()))
    if norm == 0.0:
        return {}
    return {fid: w / norm for fid, w in weighted.items()}


# -- classification ------------------------------------------------------------


def posterior_reference(
    vectors: Sequence[Sequence[Tuple[int, float]]],
    labels: Sequence[str],
    k: int,
    alpha: float,
    query: Sequence[Tuple[int, float]],
) -> Tuple[List[str], List[float]]:
    """Direct (non-log) Bayes posterior for small corpora.

    Safe only while feature counts and weights stay small enough that the raw
    probability product does not underflow; the oracle tests keep within that.
    """
    classes = sorted(set(labels))
    n = len(labels)
    scores: List[float] = []
    for cls in classes:
        members = [i for i, label in enumerate(labels) if label == cls]
        sums = [0.0] * k
        total = 0.0
        for i in members:
            for fid, weight in vectors[i]:
                sums[fid] += weight
                total += weight
        score = len(members) / n
        for fid, weight in query:
            score *= ((alpha + sums[fid]) / (k * alpha + total)) ** weight
        scores.append(score)
    denom = sum(scores)
    return classes, [s / denom for s in scores]


def sweep_reference(
    points: Sequence[Tuple[float, bool]], grid: Sequence[float]
) -> List[Tuple[float, float, float]]:
    """(threshold, precision among accepted, recall of positives) per step."""
    positives = sum(1 for _, truth in points if truth)
    rows = []
    for threshold in grid:
        accepted = [(p, truth) for p, truth in points if p >= threshold]
        hits = sum(1 for _, truth in accepted if truth)
        rows.append(
            (
                threshold,
                hits / max(1, len(accepted)),
                hits / max(1, positives),
            )
        )
    return rows


def top_features_reference(
    log_likelihood: Sequence[Sequence[float]],
    classes: Sequence[str],
    terms: Sequence[str],
    n: int,
) -> Dict[str, List[Tuple[str, float]]]:
    out: Dict[str, List[Tuple[str, float]]] = {}
    for c, label in enumerate(classes):
        scored = []
        for i, term in enumerate(terms):
            others = [
                log_likelihood[o][i] for o in range(len(classes)) if o != c
            ]
            scored.append((term, log_likelihood[c][i] - max(others)))
        scored.sort(key=lambda item: (-item[1], item[0]))
        out[label] = scored[:n]
    return out


# -- inclusion trees -----------------------------------------------------------


def _host_of(url: Optional[str]) -> Optional[str]:
    if not url:
        return None
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return host or None


def tree_reference(record, psl) -> Tuple[str, List[dict], int]:
    """Linear-scan tree construction: (root, node dicts, unattributed count)."""
    root = psl.registrable_domain(_host_of(record.final_url))
    nodes: List[dict] = []
    unattributed = 0
    for request in record.requests:
        if request.request_type == "document":
            continue
        host = _host_of(request.url)
        if host is None:
            continue
        domain = psl.registrable_domain(host)
        if domain == root:
            continue
        parent = -1
        level = 1
        init_host = _host_of(request.initiator_url)
        if init_host is None:
            unattributed += 1
        else:
            init_domain = psl.registrable_domain(init_host)
            if init_domain != root:
                best = None
                for j, node in enumerate(nodes):
                    if node["etld1"] == init_domain and (
                        best is None or node["level"] < nodes[best]["level"]
                    ):
                        best = j
                if best is None:
                    unattributed += 1
                else:
                    parent = best
                    level = nodes[best]["level"] + 1
        if any(n["domain"] == host and n["level"] == level for n in nodes):
            continue
        nodes.append(
            {
                "domain": host,
                "etld1": domain,
                "level": level,
                "parent": parent,
                "via": request.seq,
            }
        )
    return root, nodes, unattributed


def chains_reference(root: str, nodes: Sequence) -> List[Tuple[str, ...]]:
    """Recursive root-to-leaf enumeration over (domain, parent_index) nodes."""
    children: Dict[int, List[int]] = {}
    for i, node in enumerate(nodes):
        children.setdefault(node.parent_index, []).append(i)

    out: List[Tuple[str, ...]] = []

    def walk(index: int, path: Tuple[str, ...]) -> None:
        kids = children.get(index, [])
        if index >= 0 and not kids:
            out.append(path)
            return
        for kid in kids:
            walk(kid, path + (nodes[kid].domain,))

    walk(-1, (root,))
    return out


# -- distribution statistics ---------------------------------------------------


def low_median_reference(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def mean_reference(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def pstdev_reference(values: Sequence[float]) -> float:
    mu = mean_reference(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def site_counts_reference(record, root: str, psl) -> Tuple[int, int, int]:
    """(third-party requests, distinct full hosts, distinct eTLD+1s) for one site."""
    hosts: Set[str] = set()
    domains: Set[str] = set()
    total = 0
    for request in record.requests:
        if request.request_type == "document":
            continue
        host = _host_of(request.url)
        if host is None:
            continue
        domain = psl.registrable_domain(host)
        if domain == root:
            continue
        total += 1
        hosts.add(host)
        domains.add(domain)
    return total, len(hosts), len(domains)


def coverage_reference(
    by_category: Dict[str, List[Tuple[str, Set[str]]]], tracker: str, category: str
) -> Tuple[float, float]:
    """(percent of category sites with tracker, percent of all other sites)."""

    def merged(entries: List[Tuple[str, Set[str]]]) -> Dict[str, Set[str]]:
        sites: Dict[str, Set[str]] = {}
        for site, trackers in entries:
            sites.setdefault(site, set()).update(trackers)
        return sites

    inside = merged(by_category[category])
    outside = merged(
        [
            entry
            for name, entries in by_category.items()
            if name != category
            for entry in entries
        ]
    )
    cat_pct = 100.0 * sum(1 for t in inside.values() if tracker in t) / len(inside)
    other_pct = (
        100.0 * sum(1 for t in outside.values() if tracker in t) / len(outside)
        if outside
        else 0.0
    )
    return cat_pct, other_pct


# -- cookie-sync detection -----------------------------------------------------


def entropy_reference(value: str) -> float:
    """Shannon entropy in bits per character, via explicit distinct-char loop."""
    total = len(value)
    bits = 0.0
    for ch in sorted(set(value)):
        p = value.count(ch) / total
        bits -= p * math.log(p, 2)
    return bits


def obfuscated_reference(value: str, keywords: Sequence[str]) -> bool:
    allowed = set(
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/=_-"
    )
    if len(value) < 16:
        return False
    if not set(value) <= allowed:
        return False
    lowered = value.lower()
    for keyword in keywords:
        if keyword in lowered:
            return False
    return entropy_reference(value) >= 3.5


def csync_reference(record, tree, keywords: Sequence[str], psl) -> List[Tuple]:
    """(source eTLD+1, dest eTLD+1, keyword, seq) per sharing request."""
    root = tree.root
    known = sorted({node.etld1 for node in tree.nodes})
    found: List[Tuple] = []
    for request in record.requests:
        if request.request_type == "document":
            continue
        source_host = _host_of(request.initiator_url)
        if source_host is None:
            continue
        source = psl.registrable_domain(source_host)
        if source == root or source not in known:
            continue
        dest_host = _host_of(request.url)
        if dest_host is None:
            continue
        dest = psl.registrable_domain(dest_host)
        if dest == root or dest == source:
            continue
        try:
            parts = urlsplit(request.url)
        except ValueError:
            continue
        pairs = parse_qsl(parts.query, keep_blank_values=True)
        if not pairs:
            continue
        path = unquote(parts.path).lower()
        values_by_key: Dict[str, List[str]] = {}
        for key, value in pairs:
            values_by_key.setdefault(key.lower(), []).append(value)
        surviving_values = []
        for _, value in pairs:
            if not obfuscated_reference(value, keywords):
                surviving_values.append(value.lower())

        hit = None
        for keyword in keywords:
            if keyword in path:
                hit = keyword
            else:
                for key, values in values_by_key.items():
                    if keyword in key:
                        clean = [
                            v for v in values if not obfuscated_reference(v, keywords)
                        ]
                        if clean:
                            hit = keyword
                            break
                if hit is None:
                    for value in surviving_values:
                        if keyword in value:
                            hit = keyword
                            break
            if hit is not None:
                break
        if hit is not None:
            found.append((source, dest, hit, request.seq))
    return found


def csync_group_reference(
    entries: Sequence[Tuple], niche: Set[str]
) -> Tuple[int, int, int, float, int, int, float, int, int, float]:
    """Aggregate one category group of (record, tree, events) triples."""
    domains: Set[str] = set()
    pairs: Set[Tuple[str, str]] = set()
    with_events = 0
    requests = 0
    event_count = 0
    for record, tree, events in entries:
        for node in tree.nodes:
            domains.add(node.etld1)
        requests += len(record.requests)
        event_count += len(events)
        if events:
            with_events += 1
        for event in events:
            pairs.add(tuple(sorted((event.source_etld1, event.dest_etld1))))
    niche_pairs = sum(1 for a, b in pairs if a in niche or b in niche)
    n = len(entries)
    return (
        n,
        len(domains),
        with_events,
        100.0 * with_events / n if n else 0.0,
        requests,
        event_count,
        100.0 * event_count / requests if requests else 0.0,
        len(pairs),
        niche_pairs,
        100.0 * niche_pairs / len(pairs) if pairs else 0.0,
    )
