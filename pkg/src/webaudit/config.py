"""Pipeline configuration: one JSON file holding every tunable, flags override."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Mapping, Optional, Tuple

from .classifier import DEFAULT_THRESHOLD_GRID
from .coverage import GRANULARITY_ETLD1, GRANULARITY_FULL
from .csync import CSyncKeywordList
from .features import SourceMode
from .psl import PublicSuffixList
from .textprep import PrepConfig, load_stopwords


class ConfigError(Exception):
    """Bad configuration or unusable referenced file; maps to exit code 1."""


WEIGHTING_BOW = "bow"
WEIGHTING_TFIDF = "tfidf"


@dataclass(frozen=True)
class PipelineConfig:
    # Category mapping: canonical name -> raw labels folded into it. Empty
    # means labels are already canonical.
    categories: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    source_mode: str = SourceMode.META_CONTENT.value
    weighting: str = WEIGHTING_TFIDF
    k: int = 3000
    alpha: float = 1.0
    split_ratio: float = 0.7
    seed: int = 0
    threshold: float = 0.5
    threshold_grid: Tuple[float, ...] = DEFAULT_THRESHOLD_GRID
    min_tokens: int = 5
    english_stopword_ratio_threshold: float = 0.02
    topk_label: str = "TopK"
    niche_q: Dict[str, float] = field(default_factory=dict)  # category -> percent
    niche_default_q: float = 100.0  # filter disabled unless tightened
    niche_top_n: int = 10
    niche_granularity: str = GRANULARITY_ETLD1
    top_features_n: int = 10
    hop_top_trackers: int = 20
    keyword_list_path: Optional[str] = None
    stopword_list_path: Optional[str] = None
    psl_path: Optional[str] = None
    input_path: Optional[str] = None
    output_dir: Optional[str] = None

    def __post_init__(self) -> None:
        try:
            SourceMode(self.source_mode)
        except ValueError:
            raise ConfigError(f"unknown source_mode {self.source_mode!r}") from None
        if self.weighting not in (WEIGHTING_BOW, WEIGHTING_TFIDF):
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError("split_ratio must lie strictly between 0 and 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        if not self.threshold_grid:
            raise ConfigError("threshold_grid must be non-empty")
        if self.min_tokens < 0:
            raise ConfigError("min_tokens must be >= 0")
        if not 0.0 <= self.english_stopword_ratio_threshold <= 1.0:
            raise ConfigError("english_stopword_ratio_threshold must lie in [0, 1]")
        if any(q < 0 for q in self.niche_q.values()) or self.niche_default_q < 0:
            raise ConfigError("niche q thresholds must be >= 0")
        if self.niche_top_n < 1:
            raise ConfigError("niche_top_n must be >= 1")
        if self.niche_granularity not in (GRANULARITY_ETLD1, GRANULARITY_FULL):
            raise ConfigError(f"unknown niche_granularity {self.niche_granularity!r}")
        if self.hop_top_trackers < 1:
            raise ConfigError("hop_top_trackers must be >= 1")
        for path in (
            self.keyword_list_path,
            self.stopword_list_path,
            self.psl_path,
            self.input_path,
        ):
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"referenced file does not exist: {path}")

    # Loaded-resource views

    def mode(self) -> SourceMode:
        return SourceMode(self.source_mode)

    def prep_config(self) -> PrepConfig:
        stopwords = None
        if self.stopword_list_path is not None:
            with open(self.stopword_list_path, encoding="utf-8") as handle:
                stopwords = load_stopwords(handle)
        return PrepConfig(
            stopword_list=stopwords,
            min_tokens=self.min_tokens,
            english_stopword_ratio_threshold=self.english_stopword_ratio_threshold,
        )

    def keyword_list(self) -> CSyncKeywordList:
        if self.keyword_list_path is None:
            return CSyncKeywordList.default()
        with open(self.keyword_list_path, encoding="utf-8") as handle:
            return CSyncKeywordList.load_lines(handle)

    def psl(self) -> PublicSuffixList:
        if self.psl_path is None:
            return PublicSuffixList.default()
        return PublicSuffixList.load(self.psl_path)

    def map_label(self, label: Optional[str]) -> Optional[str]:
        """Raw record label -> canonical category name, or None when unmapped."""
        if label is None:
            return None
        if not self.categories:
            return label
        for name, raw_labels in self.categories.items():
            if label == name or label in raw_labels:
                return name
        return None

    def q_for(self, category: str) -> float:
        return self.niche_q.get(category, self.niche_default_q)


_FIELD_NAMES = {f.name for f in fields(PipelineConfig)}


def config_from_obj(obj: Mapping) -> PipelineConfig:
    if not isinstance(obj, Mapping):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(obj) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = dict(obj)
    if "categories" in kwargs:
        raw = kwargs["categories"]
        if not isinstance(raw, Mapping):
            raise ConfigError("categories must map names to label lists")
        kwargs["categories"] = {
            str(name): tuple(str(v) for v in values) for name, values in raw.items()
        }
    if "threshold_grid" in kwargs:
        kwargs["threshold_grid"] = tuple(float(t) for t in kwargs["threshold_grid"])
    if "niche_q" in kwargs:
        raw = kwargs["niche_q"]
        if not isinstance(raw, Mapping):
            raise ConfigError("niche_q must map categories to percentages")
        kwargs["niche_q"] = {str(name): float(q) for name, q in raw.items()}
    try:
        return PipelineConfig(**kwargs)
    except TypeError as err:
        raise ConfigError(f"bad config value types: {err}") from None


def load_config(path: Optional[str]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        with open(path, encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    return config_from_obj(obj)


def apply_overrides(config: PipelineConfig, **overrides) -> PipelineConfig:
    """Flag values override file values; None means the flag was not given."""
    changes = {key: value for key, value in overrides.items() if value is not None}
    return replace(config, **changes) if changes else config
