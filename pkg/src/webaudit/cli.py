"""Command-line pipeline: preprocess, train, classify, audit, report.

Every command is deterministic given (inputs, config, seed); floats are
serialized with 12 significant digits. Exit codes: 0 success, 1 usage or
config error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from collections import Counter
from dataclasses import fields, replace
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

from .chains import (
    InclusionTree,
    build_inclusion_tree,
    category_stats,
    enumerate_chains,
    hop_distribution,
)
from .classifier import (
    NBModel,
    balance_classes,
    evaluate,
    model_from_json,
    model_to_json,
    predict_proba,
    split_train_validation,
    top_features,
    train,
)
from .config import (
    ConfigError,
    PipelineConfig,
    WEIGHTING_TFIDF,
    apply_overrides,
    load_config,
)
from .coverage import NicheFilterConfig, SitePresence, niche_trackers, site_presence
from .csync import csync_stats, detect_csync
from .features import (
    IdfTable,
    SourceMode,
    Vocabulary,
    build_vocabulary,
    doc_terms,
    fit_idf,
    load_idf,
    load_vocabulary,
    mode_needs_requests,
    save_idf,
    save_vocabulary,
    vectorize_bow,
    vectorize_tfidf,
)
from .psl import PublicSuffixList
from .records import CrawlRecord, parse_crawl_records, validate_record
from .tableio import round12, write_csv
from .textprep import (
    Document,
    PrepConfig,
    parse_document_line,
    preprocess_or_discard,
    serialize_document,
)


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class DataError(Exception):
    """Unusable input data; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="pipeline config JSON")
    shared.add_argument("--seed", type=int, metavar="N", help="override config seed")
    shared.add_argument(
        "--threads", type=int, default=1, metavar="N", help="worker processes"
    )
    shared.add_argument("--output", metavar="DIR", help="output directory")

    parser = _Parser(prog="webaudit", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser(
        "preprocess", parents=[shared], help="crawl JSONL -> documents JSONL"
    )
    p.add_argument("input", metavar="CRAWL.jsonl")
    p.set_defaults(func=cmd_preprocess)

    p = commands.add_parser(
        "train", parents=[shared], help="documents JSONL -> model + evaluation"
    )
    p.add_argument("documents", metavar="DOCUMENTS.jsonl")
    p.add_argument(
        "--crawl", metavar="CRAWL.jsonl", help="needed by third-party-domain modes"
    )
    p.set_defaults(func=cmd_train)

    p = commands.add_parser(
        "classify", parents=[shared], help="documents + model -> predictions JSONL"
    )
    p.add_argument("documents", metavar="DOCUMENTS.jsonl")
    p.add_argument("model", metavar="MODEL.json")
    p.add_argument("--threshold", type=float, metavar="T")
    p.add_argument(
        "--crawl", metavar="CRAWL.jsonl", help="needed by third-party-domain modes"
    )
    p.set_defaults(func=cmd_classify)

    p = commands.add_parser(
        "audit", parents=[shared], help="crawl JSONL -> tracking and csync tables"
    )
    p.add_argument("input", metavar="CRAWL.jsonl")
    p.add_argument(
        "--predictions",
        metavar="PREDICTIONS.jsonl",
        help="category assignments from classify (default: record labels)",
    )
    p.set_defaults(func=cmd_audit)

    p = commands.add_parser(
        "report", parents=[shared], help="summarize a run directory as plain text"
    )
    p.add_argument("run_dir", metavar="RUN_DIR")
    p.set_defaults(func=cmd_report)

    return parser


# -- input loading ------------------------------------------------------------


def _load_crawl(path: str) -> List[CrawlRecord]:
    try:
        with open(path, encoding="utf-8") as handle:
            records, errors = parse_crawl_records(handle)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None
    for parse_error in errors:
        print(f"warning: {path}:{parse_error.line}: {parse_error.reason}", file=sys.stderr)
    bad: List[str] = []
    for record in records:
        violations = validate_record(record)
        if violations:
            bad.append(f"{record.page_url}: {violations[0].code}")
    if bad:
        detail = "; ".join(bad[:5])
        raise DataError(f"{len(bad)} invalid records in {path} ({detail})")
    return records


def _load_documents(path: str) -> List[Document]:
    docs: List[Document] = []
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    docs.append(parse_document_line(line))
                except (ValueError, TypeError) as err:
                    raise DataError(f"{path}:{lineno}: {err}") from None
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None
    return docs


def _labeled_documents(docs: Sequence[Document], config: PipelineConfig) -> List[Document]:
    labeled: List[Document] = []
    for doc in docs:
        if doc.rejected:
            continue
        label = config.map_label(doc.category_label)
        if label is None:
            raise DataError(f"document {doc.source_url} has no category assignment")
        labeled.append(replace(doc, category_label=label))
    return labeled


def _crawl_by_url(path: Optional[str]) -> Optional[Dict[str, CrawlRecord]]:
    if path is None:
        return None
    return {record.page_url: record for record in _load_crawl(path)}


def _corpus_terms(
    docs: Sequence[Document],
    mode: SourceMode,
    crawl_by_url: Optional[Dict[str, CrawlRecord]],
    psl: Optional[PublicSuffixList],
) -> List[List[str]]:
    corpus: List[List[str]] = []
    for doc in docs:
        record = crawl_by_url.get(doc.source_url) if crawl_by_url else None
        if mode_needs_requests(mode) and record is None:
            raise DataError(
                f"mode {mode.value} needs the crawl log (--crawl) for {doc.source_url}"
            )
        corpus.append(doc_terms(doc, record, mode, psl))
    return corpus


def _vectorize_corpus(terms_list, vocab: Vocabulary, idf: Optional[IdfTable]):
    bows = [vectorize_bow(terms, vocab) for terms in terms_list]
    if idf is None:
        return bows
    return [vectorize_tfidf(bow, idf) for bow in bows]


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _write_table(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        write_csv(handle, header, rows)


# -- commands -----------------------------------------------------------------


def cmd_preprocess(args, config: PipelineConfig, out_dir: str) -> None:
    records = _load_crawl(args.input)
    prep = config.prep_config()
    threads = max(1, args.threads)
    if threads == 1 or len(records) < 2:
        documents = [preprocess_or_discard(record, prep) for record in records]
    else:
        with Pool(processes=threads) as pool:
            documents = pool.map(partial(_prep_worker, prep), records)

    lines = [serialize_document(doc) for doc in documents]
    _write_text(
        os.path.join(out_dir, "documents.jsonl"),
        "".join(line + "\n" for line in lines),
    )
    reasons = Counter(doc.rejected_reason for doc in documents if doc.rejected)
    _write_table(
        os.path.join(out_dir, "rejections.csv"),
        ("reason", "count"),
        [
            ("accepted", sum(1 for doc in documents if not doc.rejected)),
            ("discarded_fetch", reasons.get("discarded_fetch", 0)),
            ("non_english", reasons.get("non_english", 0)),
            ("too_short", reasons.get("too_short", 0)),
        ],
    )


def _prep_worker(prep: PrepConfig, record: CrawlRecord) -> Document:
    return preprocess_or_discard(record, prep)


def cmd_train(args, config: PipelineConfig, out_dir: str) -> None:
    all_docs = _load_documents(args.documents)
    labeled = _labeled_documents(all_docs, config)
    if not labeled:
        raise DataError("no labeled, non-rejected documents to train on")
    mode = config.mode()
    crawl_by_url = _crawl_by_url(args.crawl)
    psl = config.psl() if mode_needs_requests(mode) else None

    try:
        balanced = balance_classes(labeled, config.seed)
        train_docs, val_docs = split_train_validation(
            balanced, config.split_ratio, config.seed
        )
    except ValueError as err:
        raise DataError(str(err)) from None
    if len({doc.category_label for doc in balanced}) < 2:
        raise DataError("training needs at least two categories")

    started = time.perf_counter()
    train_terms = _corpus_terms(train_docs, mode, crawl_by_url, psl)
    val_terms = _corpus_terms(val_docs, mode, crawl_by_url, psl)
    vocab = build_vocabulary(train_terms, config.k, mode)
    idf = None
    if config.weighting == WEIGHTING_TFIDF:
        idf = fit_idf([vectorize_bow(t, vocab) for t in train_terms], vocab)
    train_matrix = _vectorize_corpus(train_terms, vocab, idf)
    val_matrix = _vectorize_corpus(val_terms, vocab, idf)
    feature_seconds = time.perf_counter() - started

    train_labels = [doc.category_label for doc in train_docs]
    val_labels = [doc.category_label for doc in val_docs]
    started = time.perf_counter()
    model = train(train_matrix, train_labels, vocab, config.alpha)
    train_seconds = time.perf_counter() - started
    started = time.perf_counter()
    accuracy, matrix, per_class = evaluate(model, val_matrix, val_labels)
    eval_seconds = time.perf_counter() - started

    ranked = top_features(model, vocab, min(config.top_features_n, vocab.k))

    _write_text(os.path.join(out_dir, "model.json"), model_to_json(model) + "\n")
    with open(
        os.path.join(out_dir, "vocabulary.tsv"), "w", encoding="utf-8", newline=""
    ) as handle:
        save_vocabulary(vocab, handle)
    if idf is not None:
        with open(
            os.path.join(out_dir, "idf.csv"), "w", encoding="utf-8", newline=""
        ) as handle:
            save_idf(idf, handle)

    _write_table(
        os.path.join(out_dir, "summary.csv"),
        ("key", "value"),
        [
            ("n_documents", len(all_docs)),
            ("n_labeled", len(labeled)),
            ("n_balanced", len(balanced)),
            ("class_size", len(balanced) // len(model.classes)),
            ("n_train", len(train_docs)),
            ("n_validation", len(val_docs)),
            ("classes", "|".join(model.classes)),
            ("source_mode", mode.value),
            ("weighting", config.weighting),
            ("k_requested", config.k),
            ("k_effective", vocab.k),
            ("alpha", float(config.alpha)),
            ("split_ratio", float(config.split_ratio)),
            ("seed", config.seed),
            ("accuracy_percent", round12(accuracy)),
        ],
    )
    _write_table(
        os.path.join(out_dir, "evaluation.csv"),
        ("scope", "accuracy_percent"),
        [("overall", round12(accuracy))]
        + [
            (label, round12(value))
            for label, value in zip(model.classes, per_class)
        ],
    )
    _write_table(
        os.path.join(out_dir, "confusion_matrix.csv"),
        ("actual", "n") + model.classes,
        [
            (label, sum(matrix.counts[i]))
            + tuple(round12(cell) for cell in matrix.row_percent[i])
            for i, label in enumerate(model.classes)
        ],
    )
    _write_table(
        os.path.join(out_dir, "top_features.csv"),
        ("category", "rank", "term", "score"),
        [
            (label, rank, term, round12(score))
            for label in model.classes
            for rank, (term, score) in enumerate(ranked[label], start=1)
        ],
    )
    _write_table(
        os.path.join(out_dir, "timings.csv"),
        ("stage", "seconds"),
        [
            ("feature_engineering", feature_seconds),
            ("training", train_seconds),
            ("evaluation", eval_seconds),
        ],
    )


def _load_model_dir(model_path: str) -> Tuple[NBModel, Vocabulary, Optional[IdfTable]]:
    try:
        with open(model_path, encoding="utf-8") as handle:
            model = model_from_json(handle.read())
    except OSError as err:
        raise DataError(f"cannot read {model_path}: {err}") from None
    except (ValueError, KeyError) as err:
        raise DataError(f"bad model file {model_path}: {err}") from None
    base = os.path.dirname(os.path.abspath(model_path))
    vocab_path = os.path.join(base, "vocabulary.tsv")
    try:
        with open(vocab_path, encoding="utf-8") as handle:
            vocab = load_vocabulary(handle, model.mode)
    except OSError as err:
        raise DataError(f"cannot read {vocab_path}: {err}") from None
    except ValueError as err:
        raise DataError(f"bad vocabulary file {vocab_path}: {err}") from None
    if vocab.content_hash() != model.vocab_ref:
        raise DataError("vocabulary hash does not match the model's vocab_ref")
    idf_path = os.path.join(base, "idf.csv")
    idf: Optional[IdfTable] = None
    if os.path.isfile(idf_path):  # written by train only under tf-idf weighting
        with open(idf_path, encoding="utf-8") as handle:
            idf = load_idf(handle)
    return model, vocab, idf


def cmd_classify(args, config: PipelineConfig, out_dir: str) -> None:
    threshold = args.threshold if args.threshold is not None else config.threshold
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError("threshold must lie in [0, 1]")
    model, vocab, idf = _load_model_dir(args.model)
    docs = _load_documents(args.documents)
    crawl_by_url = _crawl_by_url(args.crawl)
    psl = config.psl() if mode_needs_requests(model.mode) else None

    lines: List[str] = []
    for doc in docs:
        obj: Dict[str, object] = {
            "source_url": doc.source_url,
            "category_label": doc.category_label,
            "rejected_reason": doc.rejected_reason,
            "probabilities": None,
            "predicted_class": None,
            "p_max": None,
            "accepted": None,
        }
        if not doc.rejected:
            record = crawl_by_url.get(doc.source_url) if crawl_by_url else None
            if mode_needs_requests(model.mode) and record is None:
                raise DataError(
                    f"mode {model.mode.value} needs the crawl log (--crawl) "
                    f"for {doc.source_url}"
                )
            terms = doc_terms(doc, record, model.mode, psl)
            bow = vectorize_bow(terms, vocab)
            vector = vectorize_tfidf(bow, idf) if idf is not None else bow
            prediction = predict_proba(model, vector)
            obj["probabilities"] = {
                label: round12(p)
                for label, p in zip(model.classes, prediction.probabilities)
            }
            obj["predicted_class"] = prediction.predicted_class
            obj["p_max"] = round12(prediction.p_max)
            if prediction.p_max >= threshold:
                obj["accepted"] = prediction.predicted_class
        lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
    _write_text(
        os.path.join(out_dir, "predictions.jsonl"),
        "".join(line + "\n" for line in lines),
    )


def _load_assignments(path: str) -> Dict[str, Optional[str]]:
    assignments: Dict[str, Optional[str]] = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    assignments[obj["source_url"]] = obj.get("accepted")
                except (ValueError, KeyError, TypeError) as err:
                    raise DataError(f"{path}:{lineno}: {err}") from None
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None
    return assignments


def cmd_audit(args, config: PipelineConfig, out_dir: str) -> None:
    records = _load_crawl(args.input)
    if not records:
        raise DataError("audit needs at least one record")
    psl = config.psl()
    assignments = _load_assignments(args.predictions) if args.predictions else None

    corpus: List[Tuple[CrawlRecord, InclusionTree, str]] = []
    for record in records:
        if assignments is not None:
            if record.page_url not in assignments:
                raise DataError(f"no prediction for {record.page_url}")
            category = assignments[record.page_url]
        else:
            category = config.map_label(record.category_label)
        if category is None:
            raise DataError(f"record {record.page_url} has no category assignment")
        corpus.append((record, build_inclusion_tree(record, psl), category))

    stat_rows = category_stats(corpus, psl, config.topk_label)
    _write_table(
        os.path.join(out_dir, "category_stats.csv"),
        tuple(f.name for f in fields(stat_rows[0])),
        [
            tuple(
                round12(value) if isinstance(value, float) else value
                for value in (getattr(row, f.name) for f in fields(row))
            )
            for row in stat_rows
        ],
    )

    chain_rows: List[Tuple] = []
    for record, tree, category in corpus:
        chains = enumerate_chains(tree)
        level_counts = Counter(node.level for node in tree.nodes)
        for level in sorted(level_counts):
            chain_rows.append(
                (
                    record.page_url,
                    category,
                    len(chains),
                    tree.max_level(),
                    tree.unattributed,
                    level,
                    level_counts[level],
                )
            )
    _write_table(
        os.path.join(out_dir, "chains_levels.csv"),
        ("site", "category", "n_chains", "max_level", "unattributed", "level", "n_nodes"),
        chain_rows,
    )

    by_category: Dict[str, List[Tuple[CrawlRecord, InclusionTree]]] = {}
    for record, tree, category in corpus:
        by_category.setdefault(category, []).append((record, tree))
    hop_rows: List[Tuple] = []
    for category in sorted(by_category):
        trees = [tree for _, tree in by_category[category]]
        trackers = sorted({node.etld1 for tree in trees for node in tree.nodes})
        ranked = sorted(
            ((hop_distribution(trees, tracker), tracker) for tracker in trackers),
            key=lambda item: (-item[0][0], item[1]),
        )[: config.hop_top_trackers]
        for (coverage_percent, hops), tracker in ranked:
            for hop, percent in hops.items():
                hop_rows.append(
                    (category, tracker, round12(coverage_percent), hop, round12(percent))
                )
    _write_table(
        os.path.join(out_dir, "hop_distributions.csv"),
        ("category", "tracker", "coverage_percent", "hop", "percent"),
        hop_rows,
    )

    presence_by_category: Dict[str, List[SitePresence]] = {}
    for record, tree, category in corpus:
        presence_by_category.setdefault(category, []).append(
            site_presence(record.final_url, tree, config.niche_granularity)
        )
    niche_rows: List[Tuple] = []
    niche_lists: Dict[str, set] = {}
    for category in sorted(presence_by_category):
        if category == config.topk_label:
            continue
        filter_config = NicheFilterConfig(
            q=config.q_for(category),
            top_n=config.niche_top_n,
            domain_granularity=config.niche_granularity,
        )
        entries = niche_trackers(presence_by_category, category, filter_config)
        niche_lists[category] = {entry.tracker for entry in entries}
        for rank, entry in enumerate(entries, start=1):
            niche_rows.append(
                (
                    category,
                    rank,
                    entry.tracker,
                    round12(entry.cat_percent),
                    round12(entry.other_percent),
                    round12(float(filter_config.q)),
                )
            )
    _write_table(
        os.path.join(out_dir, "coverage_niche.csv"),
        ("category", "rank", "tracker", "cat_percent", "other_percent", "q"),
        niche_rows,
    )

    keywords = config.keyword_list()
    event_corpus = []
    event_lines: List[str] = []
    for record, tree, category in corpus:
        events = detect_csync(record, tree, keywords, psl)
        event_corpus.append((record, tree, category, events))
        for event in events:
            event_lines.append(
                json.dumps(
                    {
                        "site": event.site,
                        "source_etld1": event.source_etld1,
                        "dest_etld1": event.dest_etld1,
                        "matched_keyword": event.matched_keyword,
                        "request_seq": event.request_seq,
                        "url": event.url,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
            )
    _write_text(
        os.path.join(out_dir, "csync_events.jsonl"),
        "".join(line + "\n" for line in event_lines),
    )
    stats_rows = csync_stats(event_corpus, niche_lists, config.topk_label)
    _write_table(
        os.path.join(out_dir, "csync_stats.csv"),
        tuple(f.name for f in fields(stats_rows[0])),
        [
            tuple(
                round12(value) if isinstance(value, float) else value
                for value in (getattr(row, f.name) for f in fields(row))
            )
            for row in stats_rows
        ],
    )


def _read_csv_rows(path: str) -> Optional[List[List[str]]]:
    if not os.path.isfile(path):
        return None
    with open(path, encoding="utf-8", newline="") as handle:
        return list(csv.reader(handle))


def cmd_report(args, config: PipelineConfig, out_dir: str) -> None:
    sections: List[str] = []

    def add_table(title: str, rows: Optional[List[List[str]]]) -> None:
        if not rows:
            return
        widths = [
            max(len(row[i]) for row in rows) for i in range(len(rows[0]))
        ]
        lines = [
            "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
            for row in rows
        ]
        sections.append(title + "\n" + "\n".join(lines))

    run = args.run_dir
    add_table("Preprocessing rejections", _read_csv_rows(os.path.join(run, "rejections.csv")))
    add_table("Training summary", _read_csv_rows(os.path.join(run, "summary.csv")))
    add_table("Validation accuracy", _read_csv_rows(os.path.join(run, "evaluation.csv")))
    add_table("Confusion matrix (row %)", _read_csv_rows(os.path.join(run, "confusion_matrix.csv")))
    add_table("Top features per category", _read_csv_rows(os.path.join(run, "top_features.csv")))
    add_table("Third-party presence per category", _read_csv_rows(os.path.join(run, "category_stats.csv")))
    add_table("Tracker hop distributions", _read_csv_rows(os.path.join(run, "hop_distributions.csv")))
    add_table("Niche trackers", _read_csv_rows(os.path.join(run, "coverage_niche.csv")))
    add_table("Cookie synchronization", _read_csv_rows(os.path.join(run, "csync_stats.csv")))
    if not sections:
        raise DataError(f"no recognized artifacts under {run}")
    _write_text(os.path.join(out_dir, "report.txt"), "\n\n".join(sections) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        config = load_config(args.config)
        config = apply_overrides(config, seed=args.seed, output_dir=args.output)
        out_dir = config.output_dir
        if out_dir is None:
            raise ConfigError("an output directory is required (--output)")
        os.makedirs(out_dir, exist_ok=True)
        args.func(args, config, out_dir)
        return 0
    except UsageError as err:
        print(f"error: usage: {err}", file=sys.stderr)
        return 1
    except ConfigError as err:
        print(f"error: config: {err}", file=sys.stderr)
        return 1
    except DataError as err:
        print(f"error: data: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
