"""Feature spaces over page text and third-party domains: vocabulary, BoW, TF-IDF."""

from __future__ import annotations

import csv
import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from .chains import build_inclusion_tree
from .psl import PublicSuffixList
from .records import CrawlRecord
from .tableio import write_csv
from .textprep import Document


class SourceMode(Enum):
    """Which page signals feed the feature space; values are the wire names."""

    CONTENT = "C"
    META = "M"
    THIRD_PARTY_DOMAINS = "TPD"
    THIRD_PARTY_DOMAINS_LEVELED = "TPD_LVL"
    META_CONTENT = "M_plus_C"
    META_CONTENT_THIRD_PARTY = "M_plus_C_plus_TPD"
    META_CONTENT_THIRD_PARTY_LEVELED = "M_plus_C_plus_TPD_LVL"


# Term sources concatenated per mode, in emission order.
_MODE_PARTS: Dict[SourceMode, Tuple[str, ...]] = {
    SourceMode.CONTENT: ("content",),
    SourceMode.META: ("meta",),
    SourceMode.THIRD_PARTY_DOMAINS: ("tpd",),
    SourceMode.THIRD_PARTY_DOMAINS_LEVELED: ("tpd_lvl",),
    SourceMode.META_CONTENT: ("meta", "content"),
    SourceMode.META_CONTENT_THIRD_PARTY: ("meta", "content", "tpd"),
    SourceMode.META_CONTENT_THIRD_PARTY_LEVELED: ("meta", "content", "tpd_lvl"),
}


def mode_needs_requests(mode: SourceMode) -> bool:
    return any(part.startswith("tpd") for part in _MODE_PARTS[mode])


def doc_terms(
    doc: Document,
    record: Optional[CrawlRecord],
    mode: SourceMode,
    psl: Optional[PublicSuffixList] = None,
) -> List[str]:
    """Term list for one page under a source mode.

    Third-party terms are the inclusion-tree node domains (one term per node,
    so a domain reached at two levels contributes twice); the leveled variant
    appends "-<level>" to each domain.
    """
    terms: List[str] = []
    for part in _MODE_PARTS[mode]:
        if part == "meta":
            terms.extend(doc.meta_tokens)
        elif part == "content":
            terms.extend(doc.content_tokens)
        else:
            if record is None or psl is None:
                raise ValueError(
                    f"mode {mode.value} needs the crawl record and a suffix list"
                )
            tree = build_inclusion_tree(record, psl)
            if part == "tpd":
                terms.extend(node.domain for node in tree.nodes)
            else:
                terms.extend(f"{node.domain}-{node.level}" for node in tree.nodes)
    return terms


@dataclass(frozen=True)
class Vocabulary:
    """Feature id space: index in `terms` is the feature id."""

    terms: Tuple[str, ...]
    df: Tuple[int, ...]  # document frequency backing the selection, same order
    k: int
    source_mode: SourceMode

    def __post_init__(self) -> None:
        if len(self.terms) != self.k or len(self.df) != self.k:
            raise ValueError("terms/df length must equal k")
        if len(set(self.terms)) != self.k:
            raise ValueError("vocabulary terms must be unique")

    @cached_property
    def term_index(self) -> Dict[str, int]:
        return {term: i for i, term in enumerate(self.terms)}

    def content_hash(self) -> str:
        digest = hashlib.sha256("\n".join(self.terms).encode("utf-8"))
        return digest.hexdigest()


def build_vocabulary(
    corpus: Sequence[Sequence[str]], k: int, mode: SourceMode
) -> Vocabulary:
    """Top-k terms by document frequency; ties and ordering are lexicographic.

    Canonical order: df descending, then term ascending. When the corpus has
    fewer than k distinct terms, k shrinks to the distinct count.
    """
    if not corpus:
        raise ValueError("build_vocabulary needs a non-empty corpus")
    if k < 1:
        raise ValueError("k must be >= 1")
    df: Counter = Counter()
    for terms in corpus:
        df.update(set(terms))
    ordered = sorted(df.items(), key=lambda item: (-item[1], item[0]))[:k]
    return Vocabulary(
        terms=tuple(term for term, _ in ordered),
        df=tuple(count for _, count in ordered),
        k=len(ordered),
        source_mode=mode,
    )


@dataclass(frozen=True)
class SparseVector:
    """(feature_id, weight) entries, ids strictly increasing, weights positive."""

    entries: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        last = -1
        for feature_id, weight in self.entries:
            if feature_id <= last:
                raise ValueError("feature ids must be strictly increasing")
            if weight <= 0:
                raise ValueError("weights must be positive")
            last = feature_id

    def total_weight(self) -> float:
        return sum(weight for _, weight in self.entries)

    def l2_norm(self) -> float:
        return math.sqrt(sum(weight * weight for _, weight in self.entries))


def vectorize_bow(terms: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """Raw in-vocabulary term counts; out-of-vocabulary terms are ignored."""
    index = vocab.term_index
    counts: Dict[int, int] = {}
    for term in terms:
        feature_id = index.get(term)
        if feature_id is not None:
            counts[feature_id] = counts.get(feature_id, 0) + 1
    return SparseVector(
        entries=tuple((fid, float(count)) for fid, count in sorted(counts.items()))
    )


@dataclass(frozen=True)
class IdfTable:
    idf: Tuple[float, ...]
    n_docs: int


def fit_idf(corpus_vectors: Sequence[SparseVector], vocab: Vocabulary) -> IdfTable:
    """Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1, never negative."""
    if not corpus_vectors:
        raise ValueError("fit_idf needs a non-empty corpus")
    df = [0] * vocab.k
    for vector in corpus_vectors:
        for feature_id, _ in vector.entries:
            if feature_id >= vocab.k:
                raise ValueError("feature id outside the vocabulary")
            df[feature_id] += 1
    n_docs = len(corpus_vectors)
    idf = tuple(math.log((1 + n_docs) / (1 + d)) + 1.0 for d in df)
    return IdfTable(idf=idf, n_docs=n_docs)


def vectorize_tfidf(bow: SparseVector, idf: IdfTable) -> SparseVector:
    """count x idf, L2-normalized; the all-zero vector stays empty."""
    k = len(idf.idf)
    weighted: List[Tuple[int, float]] = []
    for feature_id, weight in bow.entries:
        if feature_id >= k:
            raise ValueError("dimension mismatch between vector and idf table")
        weighted.append((feature_id, weight * idf.idf[feature_id]))
    norm = math.sqrt(sum(weight * weight for _, weight in weighted))
    if norm == 0.0:
        return SparseVector(entries=())
    return SparseVector(
        entries=tuple((fid, weight / norm) for fid, weight in weighted)
    )


def save_vocabulary(vocab: Vocabulary, stream: TextIO) -> None:
    """One line per feature: index<TAB>term<TAB>df."""
    for i, (term, df) in enumerate(zip(vocab.terms, vocab.df)):
        stream.write(f"{i}\t{term}\t{df}\n")


def load_vocabulary(stream: Iterable[str], mode: SourceMode) -> Vocabulary:
    terms: List[str] = []
    dfs: List[int] = []
    for lineno, line in enumerate(stream):
        line = line.rstrip("\n")
        if not line:
            continue
        index_text, term, df_text = line.split("\t")
        if int(index_text) != len(terms):
            raise ValueError(f"vocabulary line {lineno + 1}: index out of order")
        terms.append(term)
        dfs.append(int(df_text))
    return Vocabulary(terms=tuple(terms), df=tuple(dfs), k=len(terms), source_mode=mode)


def save_idf(table: IdfTable, stream: TextIO) -> None:
    write_csv(
        stream,
        ("feature_id", "idf", "n_docs"),
        ((i, value, table.n_docs) for i, value in enumerate(table.idf)),
    )


def load_idf(stream: Iterable[str]) -> IdfTable:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != ["feature_id", "idf", "n_docs"]:
        raise ValueError("unrecognized idf table header")
    idf: List[float] = []
    n_docs = 0
    for row in reader:
        if int(row[0]) != len(idf):
            raise ValueError("idf table rows out of order")
        idf.append(float(row[1]))
        n_docs = int(row[2])
    return IdfTable(idf=tuple(idf), n_docs=n_docs)
