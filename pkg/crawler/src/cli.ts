/**
 * Command line: capture a list of URLs to crawl-record JSONL.
 *
 *   webaudit-crawler capture --urls urls.txt --out crawl.jsonl [--delay 60] [--retries 3] [--no-scroll]
 *
 * The URL list has one target per line: a URL optionally followed by
 * whitespace and a category label (labels may contain spaces). Blank
 * lines and lines starting with "#" are ignored.
 */

import { createWriteStream } from "node:fs";
import { readFile } from "node:fs/promises";
import { once } from "node:events";
import yargs from "yargs";
import { CaptureTarget, captureBatch, DEFAULT_CONFIG } from "./capture.js";
import { serializeRecord } from "./records.js";

export function parseUrlList(text: string): CaptureTarget[] {
  const targets: CaptureTarget[] = [];
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.trim();
    if (!line || line.startsWith("#")) continue;
    const space = line.search(/\s/);
    if (space === -1) {
      targets.push({ url: line, label: null });
    } else {
      targets.push({ url: line.slice(0, space), label: line.slice(space).trim() });
    }
  }
  return targets;
}

export async function run(argv: string[]): Promise<number> {
  const parser = yargs(argv)
    .scriptName("webaudit-crawler")
    .command("capture", "capture URLs to crawl-record JSONL", (cmd) =>
      cmd
        .option("urls", { type: "string", demandOption: true, describe: "file with one URL [label] per line" })
        .option("out", { type: "string", demandOption: true, describe: "output JSONL path" })
        .option("delay", { type: "number", default: DEFAULT_CONFIG.postOnloadDelay, describe: "seconds to wait after load, before scrolling" })
        .option("retries", { type: "number", default: DEFAULT_CONFIG.retryAttempts, describe: "navigation attempts per page" })
        .option("timeout", { type: "number", default: DEFAULT_CONFIG.navigationTimeout, describe: "per-request timeout in seconds" })
        .option("scroll", { type: "boolean", default: true, describe: "run the lazy-load scroll pass" }),
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });

  let args;
  try {
    args = await parser.parse();
  } catch (error) {
    console.error(`error: usage: ${error instanceof Error ? error.message : String(error)}`);
    return 1;
  }

  let text: string;
  try {
    text = await readFile(args.urls as string, "utf-8");
  } catch (error) {
    console.error(`error: cannot read ${args.urls}: ${String(error)}`);
    return 2;
  }
  const targets = parseUrlList(text);

  const out = createWriteStream(args.out as string, { encoding: "utf-8" });
  let summary;
  try {
    summary = await captureBatch(
      targets,
      {
        retryAttempts: args.retries as number,
        postOnloadDelay: args.delay as number,
        navigationTimeout: args.timeout as number,
        scroll: args.scroll as boolean,
      },
      (record) => {
        if (!out.write(serializeRecord(record) + "\n")) {
          return once(out, "drain").then(() => undefined);
        }
      },
    );
  } catch (error) {
    console.error(`error: ${error instanceof Error ? error.message : String(error)}`);
    out.end();
    return 1;
  }
  out.end();
  await once(out, "finish");
  console.error(`captured ${summary.captured}, discarded ${summary.discarded} -> ${args.out}`);
  return 0;
}

