/**
 * Fetch-based page capture.
 *
 * Renders a page the way the audit pipeline needs to see it: the document
 * plus every subresource a browser would have requested, in interception
 * order, with initiator attribution. Rendering is static (fetch + HTML
 * parsing, no script execution): iframes are fetched and walked
 * recursively as sub_frame requests, and a second "scroll" pass loads
 * resources marked lazy (loading="lazy" or data-src), which a browser
 * would only request after scrolling them into view.
 *
 * No cookie jar and no identity headers: every capture starts cold.
 */

import { parse, HTMLElement, Node, NodeType } from "node-html-parser";
import {
  CrawlRecord,
  RequestEntry,
  RequestType,
  STATUS_UNREACHABLE,
  discardMarker,
  isDiscardMarker,
  utcNowRfc3339,
} from "./records.js";

export interface CaptureConfig {
  /** Navigation attempts per page before giving up; >= 1. */
  retryAttempts: number;
  /** Seconds to wait after the initial resource wave, before scrolling. */
  postOnloadDelay: number;
  /** Run the scroll pass that loads lazy resources. */
  scroll: boolean;
  /** Per-request timeout in seconds. */
  navigationTimeout: number;
  /** Iframe recursion bound; frames below this depth are fetched but not walked. */
  maxFrameDepth: number;
}

export const DEFAULT_CONFIG: CaptureConfig = {
  retryAttempts: 3,
  postOnloadDelay: 60,
  scroll: true,
  navigationTimeout: 30,
  maxFrameDepth: 5,
};

export function resolveConfig(overrides: Partial<CaptureConfig> = {}): CaptureConfig {
  const config = { ...DEFAULT_CONFIG, ...overrides };
  if (!Number.isInteger(config.retryAttempts) || config.retryAttempts < 1) {
    throw new RangeError(`retryAttempts must be an integer >= 1, got ${config.retryAttempts}`);
  }
  if (!(config.postOnloadDelay >= 0)) {
    throw new RangeError(`postOnloadDelay must be >= 0 seconds, got ${config.postOnloadDelay}`);
  }
  if (!(config.navigationTimeout > 0)) {
    throw new RangeError(`navigationTimeout must be > 0 seconds, got ${config.navigationTimeout}`);
  }
  if (!Number.isInteger(config.maxFrameDepth) || config.maxFrameDepth < 0) {
    throw new RangeError(`maxFrameDepth must be an integer >= 0, got ${config.maxFrameDepth}`);
  }
  return config;
}

const sleep = (seconds: number) =>
  seconds > 0 ? new Promise((resolve) => setTimeout(resolve, seconds * 1000)) : Promise.resolve();

interface FetchOutcome {
  status: number | null;
  finalUrl: string;
  body: string | null;
  contentType: string;
}

/** One page capture's mutable state: the request log and per-URL response cache. */
class CaptureRun {
  readonly entries: RequestEntry[] = [];
  private readonly cache = new Map<string, FetchOutcome>();
  private nextFrame = 1;

  constructor(private readonly config: CaptureConfig) {}

  newFrameId(): string {
    return `F${this.nextFrame++}`;
  }

  log(url: string, type: RequestType, initiator: string | null, frameId: string, status: number | null): void {
    this.entries.push({
      seq: this.entries.length,
      url,
      initiator_url: initiator,
      request_type: type,
      frame_id: frameId,
      response_status: status,
    });
  }

  /** Fetch with a per-capture cache so repeated tags log repeated requests but hit the network once. */
  async fetchResource(url: string): Promise<FetchOutcome> {
    const cached = this.cache.get(url);
    if (cached) return cached;
    let outcome: FetchOutcome;
    try {
      const response = await fetch(url, {
        redirect: "follow",
        signal: AbortSignal.timeout(this.config.navigationTimeout * 1000),
      });
      outcome = {
        status: response.status,
        finalUrl: response.url || url,
        body: await response.text(),
        contentType: response.headers.get("content-type") ?? "",
      };
    } catch {
      outcome = { status: null, finalUrl: url, body: null, contentType: "" };
    }
    this.cache.set(url, outcome);
    return outcome;
  }
}

interface DiscoveredResource {
  url: string;
  type: RequestType;
  lazy: boolean;
}

function tagName(node: HTMLElement): string {
  return (node.rawTagName ?? "").toLowerCase();
}

function resolveUrl(raw: string | undefined, base: string): string | null {
  if (!raw) return null;
  const trimmed = raw.trim();
  if (!trimmed || trimmed.startsWith("#")) return null;
  try {
    return new URL(trimmed, base).toString();
  } catch {
    return null;
  }
}

/**
 * Walk a parsed document in source order and list the resources a browser
 * would request. `javascript:` targets never become requests; other
 * non-http schemes (data:) are listed but will not be fetched.
 */
export function discoverResources(root: HTMLElement, baseUrl: string): DiscoveredResource[] {
  const found: DiscoveredResource[] = [];
  const visit = (node: Node): void => {
    if (node.nodeType !== NodeType.ELEMENT_NODE) return;
    const element = node as HTMLElement;
    const tag = tagName(element);
    const lazyAttr = (element.getAttribute("loading") ?? "").toLowerCase() === "lazy";
    const push = (raw: string | undefined, type: RequestType, lazy: boolean) => {
      const url = resolveUrl(raw, baseUrl);
      if (url && !url.startsWith("javascript:")) found.push({ url, type, lazy });
    };
    if (tag === "script") {
      push(element.getAttribute("src"), "script", false);
    } else if (tag === "link") {
      const rel = (element.getAttribute("rel") ?? "").toLowerCase().split(/\s+/);
      if (rel.includes("stylesheet")) push(element.getAttribute("href"), "stylesheet", false);
    } else if (tag === "img") {
      push(element.getAttribute("src"), "image", lazyAttr);
      push(element.getAttribute("data-src"), "image", true);
    } else if (tag === "iframe") {
      push(element.getAttribute("src"), "sub_frame", lazyAttr);
      push(element.getAttribute("data-src"), "sub_frame", true);
    }
    for (const child of element.childNodes) visit(child);
  };
  visit(root);
  return found;
}

const isHttp = (url: string) => url.startsWith("http://") || url.startsWith("https://");
const isHtml = (contentType: string) => contentType.toLowerCase().includes("html");

/** A frame document captured in the eager wave, kept for the scroll pass. */
interface FrameDoc {
  frameId: string;
  documentUrl: string;
  resources: DiscoveredResource[];
  depth: number;
}

async function loadFrameTree(
  run: CaptureRun,
  frames: FrameDoc[],
  resources: DiscoveredResource[],
  documentUrl: string,
  frameId: string,
  depth: number,
  config: CaptureConfig,
  wantLazy: boolean,
): Promise<void> {
  for (const resource of resources) {
    if (resource.lazy !== wantLazy) continue;
    if (!isHttp(resource.url)) {
      run.log(resource.url, resource.type, documentUrl, frameId, null);
      continue;
    }
    if (resource.type !== "sub_frame") {
      const outcome = await run.fetchResource(resource.url);
      run.log(resource.url, resource.type, documentUrl, frameId, outcome.status);
      continue;
    }
    const childId = run.newFrameId();
    const outcome = await run.fetchResource(resource.url);
    run.log(resource.url, "sub_frame", documentUrl, childId, outcome.status);
    if (outcome.body === null || !isHtml(outcome.contentType) || depth >= config.maxFrameDepth) {
      continue;
    }
    const childUrl = outcome.finalUrl;
    const childResources = discoverResources(parse(outcome.body), childUrl);
    frames.push({ frameId: childId, documentUrl: childUrl, resources: childResources, depth: depth + 1 });
    // A frame loaded by scrolling loads its own lazy content too: it is in view.
    await loadFrameTree(run, frames, childResources, childUrl, childId, depth + 1, config, false);
    if (wantLazy) {
      await loadFrameTree(run, frames, childResources, childUrl, childId, depth + 1, config, true);
    }
  }
}

export interface CaptureTarget {
  url: string;
  label?: string | null;
}

/** Capture one page; navigation failure after all attempts yields a discard marker. */
export async function capture(
  target: string | CaptureTarget,
  overrides: Partial<CaptureConfig> = {},
): Promise<CrawlRecord> {
  const config = resolveConfig(overrides);
  const { url: pageUrl, label = null } = typeof target === "string" ? { url: target } : target;
  if (!isHttp(pageUrl)) {
    throw new TypeError(`page URL must be absolute http/https, got ${pageUrl}`);
  }

  let response: Response | null = null;
  for (let attempt = 1; attempt <= config.retryAttempts; attempt++) {
    try {
      response = await fetch(pageUrl, {
        redirect: "follow",
        signal: AbortSignal.timeout(config.navigationTimeout * 1000),
      });
      break;
    } catch {
      response = null;
    }
  }
  if (response === null) {
    return discardMarker(pageUrl, STATUS_UNREACHABLE, label);
  }
  if (response.status === 404) {
    await response.text().catch(() => "");
    return discardMarker(pageUrl, 404, label);
  }

  const finalUrl = response.url || pageUrl;
  const html = await response.text().catch(() => "");
  const run = new CaptureRun(config);
  run.log(finalUrl, "document", null, "F0", response.status);

  const frames: FrameDoc[] = [];
  const rootResources = discoverResources(parse(html), finalUrl);
  frames.push({ frameId: "F0", documentUrl: finalUrl, resources: rootResources, depth: 0 });
  await loadFrameTree(run, frames, rootResources, finalUrl, "F0", 0, config, false);

  await sleep(config.postOnloadDelay);

  if (config.scroll) {
    // Scroll pass: everything marked lazy in documents already on screen.
    for (const frame of [...frames]) {
      await loadFrameTree(
        run, frames, frame.resources, frame.documentUrl, frame.frameId, frame.depth, config, true,
      );
    }
  }

  return {
    page_url: pageUrl,
    final_url: finalUrl,
    category_label: label,
    fetch_status: response.status,
    html,
    requests: run.entries,
    captured_at: utcNowRfc3339(),
  };
}

export interface BatchSummary {
  captured: number;
  discarded: number;
}

/**
 * Capture pages sequentially, invoking `emit` with one record per target in
 * input order. A failure on one page never aborts the batch: it emits a
 * discard marker instead.
 */
export async function captureBatch(
  targets: Iterable<string | CaptureTarget>,
  overrides: Partial<CaptureConfig>,
  emit: (record: CrawlRecord) => void | Promise<void>,
): Promise<BatchSummary> {
  const config = resolveConfig(overrides);
  const summary: BatchSummary = { captured: 0, discarded: 0 };
  for (const target of targets) {
    const { url, label = null } = typeof target === "string" ? { url: target } : target;
    let record: CrawlRecord;
    try {
      record = await capture({ url, label }, config);
    } catch (error) {
      console.error(`capture failed for ${url}: ${String(error)}`);
      record = discardMarker(url, STATUS_UNREACHABLE, label);
    }
    if (isDiscardMarker(record)) {
      summary.discarded += 1;
    } else {
      summary.captured += 1;
    }
    await emit(record);
  }
  return summary;
}
