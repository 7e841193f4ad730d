"""Sweep the vocabulary size and report validation accuracy per k.

Demonstrates, on a synthetic corpus with per-class signal words buried in a
large shared pool, that accuracy plateaus once the vocabulary is big enough
to carry the signal terms; growing k further mostly adds noise features.

Usage:
    python3 scripts/feature_sweep.py --out sweep.csv
"""

import argparse
import sys
import time
from dataclasses import dataclass

from webaudit.classifier import evaluate, split_train_validation, train
from webaudit.features import SourceMode, build_vocabulary, fit_idf, vectorize_bow, vectorize_tfidf
from webaudit.synth import class_vocabulary, make_labeled_documents
from webaudit.tableio import write_csv

CLASSES = (
    "Ethnicity",
    "Health",
    "Political Beliefs",
    "Porn",
    "Religion",
    "Sexual Orientation",
)


@dataclass(frozen=True)
class SweepConfig:
    seed: int = 17
    docs_per_class: int = 150
    tokens_per_doc: int = 40
    signal_words_per_class: int = 60
    shared_pool_size: int = 12000
    shared_rate: float = 0.5
    split_ratio: float = 0.7
    ks: tuple = (50, 100, 300, 1000, 3000, 10000)


def accuracy_at_k(docs, k, config):
    train_docs, val_docs = split_train_validation(docs, config.split_ratio, config.seed)
    vocab = build_vocabulary(
        [d.content_tokens for d in train_docs], k=k, mode=SourceMode.CONTENT
    )
    bows = [vectorize_bow(d.content_tokens, vocab) for d in train_docs]
    idf = fit_idf(bows, vocab)
    matrix = [vectorize_tfidf(bow, idf) for bow in bows]
    model = train(matrix, [d.category_label for d in train_docs], vocab)
    val_matrix = [
        vectorize_tfidf(vectorize_bow(d.content_tokens, vocab), idf) for d in val_docs
    ]
    accuracy, _, _ = evaluate(model, val_matrix, [d.category_label for d in val_docs])
    return accuracy, vocab.k


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=17)
    parser.add_argument("--ks", type=int, nargs="+", metavar="K")
    parser.add_argument("--out", metavar="SWEEP.csv")
    args = parser.parse_args(argv)

    config = SweepConfig(seed=args.seed, ks=tuple(args.ks) if args.ks else SweepConfig.ks)
    shared_pool = tuple(f"noise{i:05d}" for i in range(config.shared_pool_size))
    vocabularies = {
        name: class_vocabulary(f"sig{j}w", config.signal_words_per_class)
        for j, name in enumerate(CLASSES)
    }
    docs = make_labeled_documents(
        vocabularies,
        docs_per_class=config.docs_per_class,
        tokens_per_doc=config.tokens_per_doc,
        seed=config.seed,
        shared_pool=shared_pool,
        shared_rate=config.shared_rate,
    )

    rows = []
    for k in config.ks:
        started = time.perf_counter()
        accuracy, k_effective, = accuracy_at_k(docs, k, config)
        elapsed = time.perf_counter() - started
        rows.append((k, k_effective, accuracy, elapsed))
        print(f"k={k:>6}  effective={k_effective:>6}  accuracy={accuracy:6.2f}%  {elapsed:.2f}s")

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            write_csv(
                handle,
                ("k_requested", "k_effective", "accuracy_percent", "seconds"),
                rows,
            )
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
