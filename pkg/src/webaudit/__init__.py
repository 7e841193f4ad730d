"""Batch audit pipeline for crawl logs: page categorization and tracking analysis."""

__version__ = "0.1.0"

from .records import CrawlRecord, RequestEntry, parse_crawl_records, validate_record
from .textprep import Document, PrepConfig, preprocess
from .psl import PublicSuffixList, etld1
from .chains import InclusionTree, build_inclusion_tree, enumerate_chains
from .features import SourceMode, Vocabulary, build_vocabulary
from .classifier import NBModel, predict_proba, train
from .csync import CSyncKeywordList, detect_csync

__all__ = [
    "CrawlRecord",
    "CSyncKeywordList",
    "Document",
    "InclusionTree",
    "NBModel",
    "PrepConfig",
    "PublicSuffixList",
    "RequestEntry",
    "SourceMode",
    "Vocabulary",
    "build_inclusion_tree",
    "build_vocabulary",
    "detect_csync",
    "enumerate_chains",
    "etld1",
    "parse_crawl_records",
    "predict_proba",
    "preprocess",
    "train",
    "validate_record",
]
