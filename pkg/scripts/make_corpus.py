"""Generate a seeded synthetic crawl log for pipeline runs and benchmarks.

Usage:
    python3 scripts/make_corpus.py --seed 7 --sites-per-category 12 --out crawl.jsonl
"""

import argparse
import sys

from webaudit.records import write_records
from webaudit.synth import SENSITIVE_CATEGORIES, make_crawl_corpus


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sites-per-category", type=int, default=12)
    parser.add_argument(
        "--categories",
        nargs="+",
        default=list(SENSITIVE_CATEGORIES) + ["TopK"],
        metavar="NAME",
    )
    parser.add_argument(
        "--no-rejects",
        action="store_true",
        help="omit the planted fetch-failure, non-English, and too-short pages",
    )
    parser.add_argument("--out", required=True, metavar="CRAWL.jsonl")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    records = make_crawl_corpus(
        seed=args.seed,
        sites_per_category=args.sites_per_category,
        categories=tuple(args.categories),
        include_rejects=not args.no_rejects,
    )
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        count = write_records(records, handle)
    print(f"wrote {count} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
