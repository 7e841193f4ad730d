"""Registrable-domain (eTLD+1) lookup against a vendored public-suffix snapshot.

The rule file uses the standard public-suffix text format: one rule per line,
``//`` comments, ``*.`` wildcard rules matching exactly one label, and ``!``
exception rules that override a matching wildcard.  Lookups never touch the
network; swap in a newer snapshot by replacing the data file.
"""

from __future__ import annotations

import ipaddress
from importlib import resources
from pathlib import Path
from typing import Iterable

_DEFAULT_SNAPSHOT = "public_suffix_list.dat"


def _read_default_snapshot() -> str:
    return resources.files("webaudit.data").joinpath(_DEFAULT_SNAPSHOT).read_text("utf-8")


class PublicSuffixList:
    """Suffix rules with longest-match semantics; lookup is total over valid hostnames."""

    def __init__(self, rules: Iterable[str]):
        self._normal: set[tuple[str, ...]] = set()
        self._wildcard: set[tuple[str, ...]] = set()
        self._exception: set[tuple[str, ...]] = set()
        self.rule_count = 0
        for rule in rules:
            labels = tuple(rule.lower().split("."))
            if not all(labels) or labels[0] == "!":
                continue
            self.rule_count += 1
            if rule.startswith("!"):
                self._exception.add((labels[0][1:],) + labels[1:])
            elif labels[0] == "*":
                self._wildcard.add(labels)
            else:
                self._normal.add(labels)

    @classmethod
    def loads(cls, text: str) -> "PublicSuffixList":
        rules = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            rules.append(line.split()[0])
        return cls(rules)

    @classmethod
    def load(cls, path: str | Path) -> "PublicSuffixList":
        return cls.loads(Path(path).read_text("utf-8"))

    @classmethod
    def default(cls) -> "PublicSuffixList":
        return cls.loads(_read_default_snapshot())

    def _suffix_length(self, labels: tuple[str, ...]) -> int:
        """Number of labels in the public suffix of the given hostname labels."""
        n = len(labels)
        # Exception rules take priority over any other match, longest first.
        for k in range(n, 0, -1):
            if labels[n - k:] in self._exception:
                return k - 1
        for k in range(n, 0, -1):
            suffix = labels[n - k:]
            if suffix in self._normal:
                return k
            if k >= 2 and ("*",) + suffix[1:] in self._wildcard:
                return k
        # Prevailing rule when nothing matches is "*": the bare TLD.
        return 1

    def public_suffix(self, host: str) -> str:
        labels = _normalized_labels(host)
        return ".".join(labels[len(labels) - self._suffix_length(labels):])

    def registrable_domain(self, host: str) -> str:
        """eTLD+1 of host; IP literals and bare public suffixes pass through unchanged."""
        normalized = _normalize_host(host)
        if _is_ip_literal(normalized):
            return normalized
        labels = tuple(normalized.split("."))
        if not all(labels):
            raise ValueError(f"invalid hostname: {host!r}")
        suffix_len = self._suffix_length(labels)
        if len(labels) <= suffix_len:
            return normalized
        return ".".join(labels[len(labels) - suffix_len - 1:])


def _normalize_host(host: str) -> str:
    if not host:
        raise ValueError("empty host")
    normalized = host.strip().lower().rstrip(".")
    if not normalized:
        raise ValueError("empty host")
    return normalized


def _normalized_labels(host: str) -> tuple[str, ...]:
    labels = tuple(_normalize_host(host).split("."))
    if not all(labels):
        raise ValueError(f"invalid hostname: {host!r}")
    return labels


def _is_ip_literal(host: str) -> bool:
    candidate = host[1:-1] if host.startswith("[") and host.endswith("]") else host
    try:
        ipaddress.ip_address(candidate)
    except ValueError:
        return False
    return True


def etld1(host: str, psl: PublicSuffixList) -> str:
    """Registrable domain of host per the loaded suffix rules."""
    return psl.registrable_domain(host)
