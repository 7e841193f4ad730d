"""HTML-to-token preprocessing: visible text, meta text, English filter, tokens."""

from __future__ import annotations

import json
from dataclasses import dataclass
from html.parser import HTMLParser
from importlib import resources
from typing import Iterable, Optional, Sequence

from .records import CrawlRecord, should_discard

REJECT_NON_ENGLISH = "non_english"
REJECT_TOO_SHORT = "too_short"
REJECT_DISCARDED_FETCH = "discarded_fetch"

REJECT_REASONS = (REJECT_NON_ENGLISH, REJECT_TOO_SHORT, REJECT_DISCARDED_FETCH)

# Elements whose text content is never user-visible.
_NON_VISIBLE_TAGS = frozenset({"script", "style", "noscript", "template"})

# meta name=/property= values whose content attribute carries page metadata.
_META_KEYS = frozenset(
    {
        "description",
        "keywords",
        "og:title",
        "og:description",
        "twitter:title",
        "twitter:description",
    }
)


def load_stopwords(lines: Iterable[str]) -> frozenset:
    """Parse a stop-word listing: one lowercase word per line, '#' comments."""
    words = []
    for line in lines:
        word = line.strip()
        if not word or word.startswith("#"):
            continue
        words.append(word.lower())
    return frozenset(words)


def default_stopwords() -> frozenset:
    text = (
        resources.files("webaudit.data")
        .joinpath("stopwords_en.txt")
        .read_text(encoding="utf-8")
    )
    return load_stopwords(text.splitlines())


@dataclass(frozen=True)
class PrepConfig:
    """Knobs for the text preprocessing stage."""

    stopword_list: frozenset = None  # type: ignore[assignment]
    min_tokens: int = 5
    english_stopword_ratio_threshold: float = 0.02

    def __post_init__(self) -> None:
        if self.stopword_list is None:
            object.__setattr__(self, "stopword_list", default_stopwords())
        else:
            object.__setattr__(self, "stopword_list", frozenset(self.stopword_list))
        if self.min_tokens < 0:
            raise ValueError("min_tokens must be >= 0")
        if not 0.0 <= self.english_stopword_ratio_threshold <= 1.0:
            raise ValueError("english_stopword_ratio_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class Document:
    """Tokenized page ready for feature extraction, or a rejection marker."""

    source_url: str
    category_label: Optional[str]
    content_tokens: tuple
    meta_tokens: tuple
    rejected_reason: Optional[str] = None

    def __post_init__(self) -> None:
        if self.rejected_reason is not None:
            if self.rejected_reason not in REJECT_REASONS:
                raise ValueError(f"unknown rejected_reason {self.rejected_reason!r}")
            if self.content_tokens or self.meta_tokens:
                raise ValueError("rejected documents must carry empty token lists")

    @property
    def rejected(self) -> bool:
        return self.rejected_reason is not None


class _VisibleTextParser(HTMLParser):
    """Collects text nodes outside script/style/noscript/template and comments."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._chunks: list = []
        self._skip_depth = 0

    def handle_starttag(self, tag: str, attrs) -> None:
        if tag in _NON_VISIBLE_TAGS:
            self._skip_depth += 1

    def handle_endtag(self, tag: str) -> None:
        if tag in _NON_VISIBLE_TAGS and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data: str) -> None:
        if self._skip_depth == 0 and data:
            self._chunks.append(data)

    def text(self) -> str:
        return " ".join("".join(self._chunks).split())


class _MetaParser(HTMLParser):
    """Collects <title> text and whitelisted <meta content=...> in document order."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._parts: list = []
        self._in_title = False
        self._seen_title = False

    def handle_starttag(self, tag: str, attrs) -> None:
        if tag == "title" and not self._seen_title:
            self._in_title = True
            self._seen_title = True
            self._parts.append([])
            return
        if tag == "meta":
            attr_map = {}
            for key, value in attrs:
                if key is not None and value is not None and key.lower() not in attr_map:
                    attr_map[key.lower()] = value
            key = attr_map.get("name", attr_map.get("property", ""))
            if key.lower() in _META_KEYS and "content" in attr_map:
                self._parts.append([attr_map["content"]])

    def handle_startendtag(self, tag: str, attrs) -> None:
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag: str) -> None:
        if tag == "title":
            self._in_title = False

    def handle_data(self, data: str) -> None:
        if self._in_title:
            self._parts[-1].append(data)

    def text(self) -> str:
        joined = " ".join("".join(part) for part in self._parts)
        return " ".join(joined.split())


def extract_visible_text(html: str) -> str:
    """Human-readable text of a page, whitespace-collapsed; tolerant of bad markup."""
    parser = _VisibleTextParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        pass  # keep whatever was recovered before the parser gave up
    return parser.text()


def extract_meta(html: str) -> str:
    """Title plus whitelisted meta descriptions/keywords, space-joined in order."""
    parser = _MetaParser()
    try:
        parser.feed(html)
        parser.close()
    except Exception:
        pass
    return parser.text()


def tokenize(text: str) -> list:
    """Lowercase, split on anything but letters/ASCII digits, drop tokens under 3 chars."""
    tokens = []
    current: list = []
    for ch in text.lower():
        if ch.isalpha() or "0" <= ch <= "9":
            current.append(ch)
        elif current:
            if len(current) >= 3:
                tokens.append("".join(current))
            current.clear()
    if len(current) >= 3:
        tokens.append("".join(current))
    return tokens


def is_english(tokens: Sequence, config: PrepConfig) -> bool:
    """Stop-word-ratio heuristic; measured before stop-word removal."""
    hits = sum(1 for token in tokens if token in config.stopword_list)
    return hits / max(1, len(tokens)) >= config.english_stopword_ratio_threshold


def preprocess(record: CrawlRecord, config: PrepConfig) -> Document:
    """Tokenize one fetched page; rejection is data, not an error."""
    raw_content = tokenize(extract_visible_text(record.html))
    raw_meta = tokenize(extract_meta(record.html))
    content = tuple(t for t in raw_content if t not in config.stopword_list)
    meta = tuple(t for t in raw_meta if t not in config.stopword_list)

    # Emptiness outranks language: a page with nothing to say is too_short even
    # when the ratio heuristic would also fail on it.
    reason = None
    if len(content) + len(meta) < config.min_tokens:
        reason = REJECT_TOO_SHORT
    elif not is_english(raw_content, config):
        reason = REJECT_NON_ENGLISH
    if reason is not None:
        content = ()
        meta = ()
    return Document(
        source_url=record.page_url,
        category_label=record.category_label,
        content_tokens=content,
        meta_tokens=meta,
        rejected_reason=reason,
    )


def document_to_obj(doc: Document) -> dict:
    return {
        "source_url": doc.source_url,
        "category_label": doc.category_label,
        "content_tokens": list(doc.content_tokens),
        "meta_tokens": list(doc.meta_tokens),
        "rejected_reason": doc.rejected_reason,
    }


def document_from_obj(obj: dict) -> Document:
    if not isinstance(obj, dict):
        raise ValueError("document line must be a JSON object")
    try:
        return Document(
            source_url=obj["source_url"],
            category_label=obj.get("category_label"),
            content_tokens=tuple(obj["content_tokens"]),
            meta_tokens=tuple(obj["meta_tokens"]),
            rejected_reason=obj.get("rejected_reason"),
        )
    except KeyError as missing:
        raise ValueError(f"document line missing field {missing}") from None


def serialize_document(doc: Document) -> str:
    return json.dumps(document_to_obj(doc), ensure_ascii=False, separators=(",", ":"))


def parse_document_line(line: str) -> Document:
    return document_from_obj(json.loads(line))


def preprocess_or_discard(record: CrawlRecord, config: PrepConfig) -> Document:
    """Single-record pipeline step: discarded fetches become marker documents."""
    if should_discard(record):
        return Document(
            source_url=record.page_url,
            category_label=record.category_label,
            content_tokens=(),
            meta_tokens=(),
            rejected_reason=REJECT_DISCARDED_FETCH,
        )
    return preprocess(record, config)


def preprocess_records(
    records: Iterable[CrawlRecord], config: PrepConfig
) -> list:
    """Batch wrapper over preprocess_or_discard, preserving input order."""
    return [preprocess_or_discard(record, config) for record in records]
