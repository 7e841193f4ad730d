"""Crawl-record data model and its JSONL serialization.

A crawl record is one rendered page visit: the page URL, the final URL after
redirects, the serialized DOM, and the ordered log of HTTP(S) requests seen
while rendering.  Records travel as newline-delimited JSON (UTF-8, one object
per line); see docs/crawl_record_schema.md for the exact field layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import IO, Iterable, Union
from urllib.parse import urlsplit

REQUEST_TYPES = ("document", "sub_frame", "script", "image", "xhr", "stylesheet", "other")

EPOCH_TS = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class RequestEntry:
    """One intercepted HTTP(S) request, in capture order."""

    seq: int
    url: str
    request_type: str = "other"
    initiator_url: str | None = None
    frame_id: str | None = None
    response_status: int | None = None


@dataclass(frozen=True)
class CrawlRecord:
    """One rendered page visit."""

    page_url: str
    final_url: str
    fetch_status: int
    html: str
    requests: tuple[RequestEntry, ...] = ()
    category_label: str | None = None
    captured_at: str = EPOCH_TS


@dataclass(frozen=True)
class Violation:
    """One schema-invariant failure found by validate_record."""

    code: str
    message: str


@dataclass(frozen=True)
class ParseError:
    """One malformed JSONL line (1-based line number)."""

    line: int
    reason: str


class RecordShapeError(ValueError):
    """A line decoded to JSON but does not have the record shape."""


def is_absolute_http_url(value: object) -> bool:
    if not isinstance(value, str):
        return False
    try:
        parts = urlsplit(value)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def _is_absolute_url(value: str) -> bool:
    try:
        return bool(urlsplit(value).scheme)
    except ValueError:
        return False


def _parse_rfc3339_utc(value: str) -> datetime | None:
    text = value[:-1] + "+00:00" if value.endswith("Z") else value
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        return None
    if stamp.tzinfo is None or stamp.utcoffset() != timezone.utc.utcoffset(None):
        return None
    return stamp


_RECORD_FIELDS = ("page_url", "final_url", "category_label", "fetch_status", "html", "requests", "captured_at")
_REQUEST_FIELDS = ("seq", "url", "initiator_url", "request_type", "frame_id", "response_status")


def _require(obj: dict, key: str, kind: type, optional: bool = False):
    value = obj.get(key)
    if value is None:
        if optional or key not in obj:
            if optional:
                return None
            raise RecordShapeError(f"missing field {key!r}")
        raise RecordShapeError(f"field {key!r} must not be null")
    # bool passes isinstance(int) checks; it is never a valid record value
    if isinstance(value, bool) or not isinstance(value, kind):
        raise RecordShapeError(f"field {key!r} must be {kind.__name__}")
    return value


def _request_from_obj(obj: object, index: int) -> RequestEntry:
    if not isinstance(obj, dict):
        raise RecordShapeError(f"requests[{index}] must be an object")
    unknown = set(obj) - set(_REQUEST_FIELDS)
    if unknown:
        raise RecordShapeError(f"requests[{index}] has unknown field {sorted(unknown)[0]!r}")
    request_type = _require(obj, "request_type", str)
    if request_type not in REQUEST_TYPES:
        raise RecordShapeError(f"requests[{index}] has unknown request_type {request_type!r}")
    return RequestEntry(
        seq=_require(obj, "seq", int),
        url=_require(obj, "url", str),
        request_type=request_type,
        initiator_url=_require(obj, "initiator_url", str, optional=True),
        frame_id=_require(obj, "frame_id", str, optional=True),
        response_status=_require(obj, "response_status", int, optional=True),
    )


def record_from_obj(obj: object) -> CrawlRecord:
    """Build a CrawlRecord from a decoded JSON object, checking shape only.

    Shape means presence and JSON types of fields; invariant checks (URL
    syntax, status range, seq ordering) live in validate_record.
    """
    if not isinstance(obj, dict):
        raise RecordShapeError("line is not a JSON object")
    unknown = set(obj) - set(_RECORD_FIELDS)
    if unknown:
        raise RecordShapeError(f"unknown field {sorted(unknown)[0]!r}")
    requests = _require(obj, "requests", list)
    return CrawlRecord(
        page_url=_require(obj, "page_url", str),
        final_url=_require(obj, "final_url", str),
        fetch_status=_require(obj, "fetch_status", int),
        html=_require(obj, "html", str),
        requests=tuple(_request_from_obj(entry, i) for i, entry in enumerate(requests)),
        category_label=_require(obj, "category_label", str, optional=True),
        captured_at=_require(obj, "captured_at", str),
    )


def record_to_obj(record: CrawlRecord) -> dict:
    return {
        "page_url": record.page_url,
        "final_url": record.final_url,
        "category_label": record.category_label,
        "fetch_status": record.fetch_status,
        "html": record.html,
        "requests": [
            {
                "seq": entry.seq,
                "url": entry.url,
                "initiator_url": entry.initiator_url,
                "request_type": entry.request_type,
                "frame_id": entry.frame_id,
                "response_status": entry.response_status,
            }
            for entry in record.requests
        ],
        "captured_at": record.captured_at,
    }


def serialize_record(record: CrawlRecord) -> str:
    """One JSONL line (no trailing newline); key order is fixed by the schema."""
    return json.dumps(record_to_obj(record), ensure_ascii=False, separators=(",", ":"))


def parse_record_line(line: str) -> CrawlRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordShapeError(f"invalid JSON: {exc.msg}") from exc
    return record_from_obj(obj)


def parse_crawl_records(
    stream: Union[IO[bytes], IO[str], Iterable[Union[bytes, str]]],
) -> tuple[list[CrawlRecord], list[ParseError]]:
    """Parse newline-delimited records, collecting one ParseError per bad line.

    Blank lines are skipped.  Well-formed lines always yield a record no
    matter how many neighbours are malformed; record order follows line
    order.  Only an unreadable stream raises.
    """
    records: list[CrawlRecord] = []
    errors: list[ParseError] = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                errors.append(ParseError(lineno, f"invalid UTF-8: {exc.reason}"))
                continue
        line = raw.strip()
        if not line:
            continue
        try:
            records.append(parse_record_line(line))
        except RecordShapeError as exc:
            errors.append(ParseError(lineno, str(exc)))
    return records, errors


def write_records(records: Iterable[CrawlRecord], fh: IO[str]) -> int:
    count = 0
    for record in records:
        fh.write(serialize_record(record))
        fh.write("\n")
        count += 1
    return count


def validate_record(record: CrawlRecord) -> list[Violation]:
    """Return every invariant violation; an empty list means valid.

    Pure: never raises, never mutates.  Policy questions (discarding 404s)
    are not schema violations and belong to should_discard.
    """
    violations: list[Violation] = []
    if not is_absolute_http_url(record.page_url):
        violations.append(Violation("page_url", f"page_url is not an absolute http/https URL: {record.page_url!r}"))
    if not is_absolute_http_url(record.final_url):
        violations.append(Violation("final_url", f"final_url is not an absolute http/https URL: {record.final_url!r}"))
    if not 100 <= record.fetch_status <= 599:
        violations.append(Violation("fetch_status", f"fetch_status {record.fetch_status} outside [100, 599]"))
    if _parse_rfc3339_utc(record.captured_at) is None:
        violations.append(Violation("captured_at", f"captured_at is not an RFC-3339 UTC timestamp: {record.captured_at!r}"))

    seen_seq: set[int] = set()
    duplicates: list[int] = []
    previous_seq: int | None = None
    document_positions: list[int] = []
    for index, entry in enumerate(record.requests):
        if entry.seq < 0:
            violations.append(Violation("seq_negative", f"requests[{index}] has negative seq {entry.seq}"))
        if entry.seq in seen_seq:
            duplicates.append(entry.seq)
        seen_seq.add(entry.seq)
        if previous_seq is not None and entry.seq < previous_seq:
            violations.append(Violation("seq_order", f"requests[{index}] seq {entry.seq} decreases after {previous_seq}"))
        previous_seq = entry.seq
        if not (isinstance(entry.url, str) and _is_absolute_url(entry.url)):
            violations.append(Violation("request_url", f"requests[{index}] url is not absolute: {entry.url!r}"))
        if entry.initiator_url is not None and not _is_absolute_url(entry.initiator_url):
            violations.append(Violation("initiator_url", f"requests[{index}] initiator_url is not absolute: {entry.initiator_url!r}"))
        if entry.request_type not in REQUEST_TYPES:
            violations.append(Violation("request_type", f"requests[{index}] has unknown request_type {entry.request_type!r}"))
        if entry.request_type == "document":
            document_positions.append(index)
    for seq in sorted(set(duplicates)):
        violations.append(Violation("seq_unique", f"duplicate seq {seq}"))
    if len(document_positions) > 1:
        violations.append(Violation("document_multiple", f"{len(document_positions)} document-type entries; only the page navigation may be one"))
    elif document_positions and document_positions[0] != 0:
        violations.append(Violation("document_position", f"document-type entry at index {document_positions[0]}, expected index 0"))
    return violations


def should_discard(record: CrawlRecord, attempts_exhausted: bool = False) -> bool:
    """Pipeline policy: drop pages unavailable after all attempts or returning 404."""
    return attempts_exhausted or record.fetch_status == 404


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
