"""Run the whole audit pipeline over one crawl log into a run directory.

Stages: preprocess -> train -> classify -> audit -> report. Artifacts land in
RUN_DIR/<stage>/ and the combined report in RUN_DIR/report.txt.

Usage:
    python3 scripts/run_pipeline.py crawl.jsonl runs/demo --seed 7
"""

import argparse
import os
import shutil
import sys

from webaudit.cli import main as webaudit


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("crawl", metavar="CRAWL.jsonl")
    parser.add_argument("run_dir", metavar="RUN_DIR")
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument(
        "--by-predictions",
        action="store_true",
        help="audit with classifier assignments instead of record labels",
    )
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    shared = []
    if args.config:
        shared += ["--config", args.config]
    if args.seed is not None:
        shared += ["--seed", str(args.seed)]

    def stage(name):
        return os.path.join(args.run_dir, name)

    def run(argv_for_stage):
        code = webaudit(argv_for_stage)
        if code != 0:
            print(f"stopped: {' '.join(argv_for_stage[:2])} exited {code}", file=sys.stderr)
            sys.exit(code)

    run(["preprocess", args.crawl, *shared, "--output", stage("prep")])
    documents = os.path.join(stage("prep"), "documents.jsonl")
    run(["train", documents, *shared, "--output", stage("model")])
    classify = ["classify", documents, os.path.join(stage("model"), "model.json")]
    if args.threshold is not None:
        classify += ["--threshold", str(args.threshold)]
    run([*classify, *shared, "--output", stage("preds")])
    audit = ["audit", args.crawl]
    if args.by_predictions:
        audit += ["--predictions", os.path.join(stage("preds"), "predictions.jsonl")]
    run([*audit, *shared, "--output", stage("audit")])

    merged = stage("artifacts")
    os.makedirs(merged, exist_ok=True)
    for name in ("prep", "model", "audit"):
        for entry in sorted(os.listdir(stage(name))):
            shutil.copy(os.path.join(stage(name), entry), os.path.join(merged, entry))
    run(["report", merged, *shared, "--output", args.run_dir])
    print(f"report: {os.path.join(args.run_dir, 'report.txt')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
