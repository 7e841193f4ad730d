import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reference_impls import coverage_reference
from webaudit.chains import build_inclusion_tree
from webaudit.coverage import (
    GRANULARITY_ETLD1,
    GRANULARITY_FULL,
    NicheFilterConfig,
    SitePresence,
    niche_trackers,
    site_presence,
    tracker_coverage,
)
from webaudit.psl import PublicSuffixList
from webaudit.synth import random_crawl_records

PSL = PublicSuffixList.default()


def presence(site: str, *trackers: str) -> SitePresence:
    return SitePresence(site=site, trackers=frozenset(trackers))


HAND_CORPUS = {
    "Health": [
        presence("h1.example", "medtrack.example", "bigads.example"),
        presence("h2.example", "medtrack.example"),
        presence("h3.example", "bigads.example"),
        presence("h4.example"),
    ],
    "Religion": [
        presence("r1.example", "bigads.example"),
        presence("r2.example", "faithpix.example"),
    ],
    "TopK": [
        presence("t1.example", "bigads.example"),
        presence("t2.example", "bigads.example"),
    ],
}


# -- site_presence -----------------------------------------------------------------


def test_site_presence_granularities():
    records = random_crawl_records(seed=1, n_sites=1)
    tree = build_inclusion_tree(records[0], PSL)
    by_etld1 = site_presence("s.example", tree)
    by_full = site_presence("s.example", tree, granularity=GRANULARITY_FULL)
    assert by_etld1.trackers == frozenset(n.etld1 for n in tree.nodes)
    assert by_full.trackers == frozenset(n.domain for n in tree.nodes)
    # Full hosts are at least as fine-grained as registrable domains.
    assert len(by_full.trackers) >= len(by_etld1.trackers)


def test_site_presence_rejects_unknown_granularity():
    records = random_crawl_records(seed=1, n_sites=1)
    tree = build_inclusion_tree(records[0], PSL)
    with pytest.raises(ValueError):
        site_presence("s.example", tree, granularity="hostname")


# -- tracker_coverage ---------------------------------------------------------------


def test_coverage_hand_values():
    entry = tracker_coverage(HAND_CORPUS, "medtrack.example", "Health")
    assert entry.cat_percent == pytest.approx(50.0)
    assert entry.other_percent == pytest.approx(0.0)
    assert entry.cat_sites == 4
    assert entry.other_sites == 4

    entry = tracker_coverage(HAND_CORPUS, "bigads.example", "Health")
    assert entry.cat_percent == pytest.approx(50.0)
    assert entry.other_percent == pytest.approx(75.0)


def test_coverage_merges_duplicate_site_observations():
    corpus = {
        "Health": [
            presence("h1.example", "a.example"),
            presence("h1.example", "b.example"),  # same site, later visit
            presence("h2.example"),
        ],
        "TopK": [presence("t1.example")],
    }
    entry = tracker_coverage(corpus, "b.example", "Health")
    assert entry.cat_sites == 2
    assert entry.cat_percent == pytest.approx(50.0)


def test_coverage_without_other_categories():
    corpus = {"Health": [presence("h1.example", "a.example")]}
    entry = tracker_coverage(corpus, "a.example", "Health")
    assert entry.cat_percent == pytest.approx(100.0)
    assert entry.other_percent == 0.0
    assert entry.other_sites == 0


def test_coverage_rejects_empty_category():
    with pytest.raises(ValueError):
        tracker_coverage(HAND_CORPUS, "x.example", "Politics")
    with pytest.raises(ValueError):
        tracker_coverage({"Health": []}, "x.example", "Health")


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_coverage_matches_reference(data):
    categories = ["A", "B", "C"]
    trackers = [f"tr{i}.example" for i in range(6)]
    corpus = {}
    plain = {}
    site_id = 0
    for name in categories:
        n = data.draw(st.integers(min_value=1, max_value=5))
        rows = []
        for _ in range(n):
            subset = data.draw(st.frozensets(st.sampled_from(trackers), max_size=6))
            rows.append(SitePresence(site=f"s{site_id}.example", trackers=subset))
            site_id += 1
        corpus[name] = rows
        plain[name] = [(p.site, set(p.trackers)) for p in rows]
    tracker = data.draw(st.sampled_from(trackers))
    category = data.draw(st.sampled_from(categories))

    entry = tracker_coverage(corpus, tracker, category)
    cat_pct, other_pct = coverage_reference(plain, tracker, category)
    assert entry.cat_percent == pytest.approx(cat_pct, abs=1e-9)
    assert entry.other_percent == pytest.approx(other_pct, abs=1e-9)


# -- niche filter -------------------------------------------------------------------


def test_niche_filter_drops_broad_trackers():
    config = NicheFilterConfig(q=10.0)
    kept = niche_trackers(HAND_CORPUS, "Health", config)
    names = [entry.tracker for entry in kept]
    assert "medtrack.example" in names
    assert "bigads.example" not in names  # 75% outside Health


def test_niche_filter_sorts_by_cat_percent_then_name():
    corpus = {
        "Health": [
            presence("h1.example", "aa.example", "bb.example", "cc.example"),
            presence("h2.example", "aa.example", "bb.example"),
        ],
        "TopK": [presence("t1.example")],
    }
    kept = niche_trackers(corpus, "Health", NicheFilterConfig(q=0.0))
    assert [entry.tracker for entry in kept] == [
        "aa.example",
        "bb.example",
        "cc.example",
    ]
    assert kept[0].cat_percent == pytest.approx(100.0)


def test_niche_filter_top_n_truncates():
    corpus = {
        "Health": [
            presence("h1.example", *[f"t{i}.example" for i in range(8)]),
        ],
        "TopK": [presence("t1.example")],
    }
    kept = niche_trackers(corpus, "Health", NicheFilterConfig(q=0.0, top_n=3))
    assert len(kept) == 3
    assert [entry.tracker for entry in kept] == [
        "t0.example",
        "t1.example",
        "t2.example",
    ]


def test_niche_filter_is_monotone_in_q():
    rng = random.Random(7)
    corpus = {}
    site_id = 0
    for name in ("A", "B", "C"):
        rows = []
        for _ in range(6):
            rows.append(
                presence(
                    f"s{site_id}.example",
                    *rng.sample([f"t{i}.example" for i in range(7)], rng.randrange(4)),
                )
            )
            site_id += 1
        corpus[name] = rows
    previous: set = set()
    for q in (0.0, 10.0, 25.0, 50.0, 100.0):
        kept = {
            entry.tracker
            for entry in niche_trackers(corpus, "A", NicheFilterConfig(q=q, top_n=50))
        }
        assert previous <= kept
        previous = kept


def test_niche_filter_rejects_empty_category():
    with pytest.raises(ValueError):
        niche_trackers(HAND_CORPUS, "Nope", NicheFilterConfig(q=5.0))


def test_niche_config_validation():
    NicheFilterConfig(q=0.0)  # boundary is legal
    with pytest.raises(ValueError):
        NicheFilterConfig(q=-0.1)
    with pytest.raises(ValueError):
        NicheFilterConfig(q=5.0, top_n=0)
    with pytest.raises(ValueError):
        NicheFilterConfig(q=5.0, domain_granularity="oops")
    assert NicheFilterConfig(q=5.0).domain_granularity == GRANULARITY_ETLD1
