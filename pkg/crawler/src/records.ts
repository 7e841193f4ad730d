/**
 * Crawl-record types and JSONL serialization.
 *
 * The shape mirrors docs/crawl_record_schema.md in the pipeline repo; the
 * pipeline's parser rejects unknown keys, so nothing may be added here
 * without updating both sides.
 */

export const REQUEST_TYPES = [
  "document",
  "sub_frame",
  "script",
  "image",
  "xhr",
  "stylesheet",
  "other",
] as const;

export type RequestType = (typeof REQUEST_TYPES)[number];

export interface RequestEntry {
  seq: number;
  url: string;
  initiator_url: string | null;
  request_type: RequestType;
  frame_id: string | null;
  response_status: number | null;
}

export interface CrawlRecord {
  page_url: string;
  final_url: string;
  category_label: string | null;
  fetch_status: number;
  html: string;
  requests: RequestEntry[];
  captured_at: string;
}

/** Navigation failed after all attempts; no HTTP status was ever observed. */
export const STATUS_UNREACHABLE = 599;

export function utcNowRfc3339(): string {
  return new Date().toISOString().replace(/\.\d{3}Z$/, "Z");
}

export function discardMarker(
  pageUrl: string,
  fetchStatus: number,
  categoryLabel: string | null = null,
): CrawlRecord {
  return {
    page_url: pageUrl,
    final_url: pageUrl,
    category_label: categoryLabel,
    fetch_status: fetchStatus,
    html: "",
    requests: [],
    captured_at: utcNowRfc3339(),
  };
}

export function isDiscardMarker(record: CrawlRecord): boolean {
  return record.html === "" && record.requests.length === 0;
}

/** One JSONL line, no trailing newline; key order is fixed by the schema. */
export function serializeRecord(record: CrawlRecord): string {
  return JSON.stringify({
    page_url: record.page_url,
    final_url: record.final_url,
    category_label: record.category_label,
    fetch_status: record.fetch_status,
    html: record.html,
    requests: record.requests.map((entry) => ({
      seq: entry.seq,
      url: entry.url,
      initiator_url: entry.initiator_url,
      request_type: entry.request_type,
      frame_id: entry.frame_id,
      response_status: entry.response_status,
    })),
    captured_at: record.captured_at,
  });
}
