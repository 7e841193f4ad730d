"""Seeded synthetic corpora for pipeline validation and experiments.

Everything here is deterministic in the seed: shared vocabulary pools are
fixed tuples, iteration goes over sorted structures, and all randomness flows
through one random.Random instance per entry point.
"""

from __future__ import annotations

import random
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .records import CrawlRecord, RequestEntry
from .textprep import Document

SENSITIVE_CATEGORIES = (
    "Ethnicity",
    "Health",
    "Political Beliefs",
    "Porn",
    "Religion",
    "Sexual Orientation",
)

# Thematic page words per category; sentences weave stop words around them so
# the English filter passes.
CATEGORY_WORDS: Dict[str, Tuple[str, ...]] = {
    "Health": (
        "cancer", "treatment", "clinic", "symptom", "therapy", "diagnosis",
        "vaccine", "patient", "disease", "surgery", "medicine", "recovery",
    ),
    "Ethnicity": (
        "heritage", "ancestry", "culture", "diaspora", "tradition", "minority",
        "migration", "identity", "community", "language", "descent", "custom",
    ),
    "Religion": (
        "god", "bible", "church", "prayer", "faith", "scripture",
        "worship", "temple", "pilgrimage", "blessing", "sermon", "sacred",
    ),
    "Sexual Orientation": (
        "lgbt", "pride", "queer", "lesbian", "bisexual", "transgender",
        "visibility", "outreach", "rainbow", "partner", "acceptance", "equality",
    ),
    "Political Beliefs": (
        "election", "policy", "party", "liberal", "conservative", "campaign",
        "ballot", "senate", "activist", "protest", "reform", "coalition",
    ),
    "Porn": (
        "adult", "explicit", "video", "webcam", "erotic", "mature",
        "nudity", "fetish", "amateur", "streaming", "premium", "models",
    ),
    "TopK": (
        "news", "weather", "sports", "recipes", "travel", "shopping",
        "finance", "technology", "gaming", "music", "movies", "reviews",
    ),
}

GERMAN_TEXT = (
    "Willkommen auf unserer Webseite. Hier finden Sie Informationen "
    "rund um Gesundheit und Beratung. Unsere Experten stehen Ihnen "
    "jederzeit gerne zur Verfuegung und beantworten alle Fragen."
)

# Tracker topology used by make_crawl_corpus. The per-category entries appear
# only on that category's sites, which makes them niche by construction.
COMMON_TRACKERS = ("cdn.metricshub.example", "adserve.adgrid.example")
NICHE_TRACKERS: Dict[str, str] = {
    "Ethnicity": "heritagepix.example",
    "Health": "healthpix.example",
    "Political Beliefs": "pollpixel.example",
    "Porn": "camtrack.example",
    "Religion": "faithmetrics.example",
    "Sexual Orientation": "prideads.example",
}
SYNC_PARTNER = "usersyncnet.example"
BLOB_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"


def _slug(label: str) -> str:
    return "".join(ch for ch in label.lower() if ch.isalnum()) or "site"


def class_vocabulary(prefix: str, size: int) -> Tuple[str, ...]:
    """Disjoint token pools like prefix000..prefixNNN."""
    return tuple(f"{prefix}{i:03d}" for i in range(size))


def make_labeled_documents(
    vocabularies: Mapping[str, Sequence[str]],
    docs_per_class: int,
    tokens_per_doc: int,
    seed: int,
    shared_pool: Sequence[str] = (),
    shared_rate: float = 0.0,
) -> List[Document]:
    """Token-level documents with per-class vocabularies.

    With shared_rate > 0, that fraction of tokens draws from shared_pool,
    giving overlapping vocabularies; otherwise classes are fully separable.
    """
    rng = random.Random(seed)
    docs: List[Document] = []
    for label in sorted(vocabularies):
        words = list(vocabularies[label])
        for i in range(docs_per_class):
            tokens = []
            for _ in range(tokens_per_doc):
                if shared_pool and rng.random() < shared_rate:
                    tokens.append(rng.choice(shared_pool))
                else:
                    tokens.append(rng.choice(words))
            docs.append(
                Document(
                    source_url=f"http://{_slug(label)}{i}.example/",
                    category_label=label,
                    content_tokens=tuple(tokens),
                    meta_tokens=(),
                    rejected_reason=None,
                )
            )
    return docs


def _page_html(title: str, keywords: Sequence[str], sentences: Sequence[str]) -> str:
    meta = " ".join(keywords)
    body = "\n".join(f"<p>{sentence}</p>" for sentence in sentences)
    return (
        "<html><head>"
        f"<title>{title}</title>"
        f'<meta name="keywords" content="{meta}">'
        f'<meta name="description" content="All about {meta}.">'
        "<style>p { margin: 0; }</style>"
        "</head><body>"
        f"<h1>{title}</h1>\n{body}"
        "<script>window.track && window.track();</script>"
        "</body></html>"
    )


def _sentences(rng: random.Random, words: Sequence[str], n: int) -> List[str]:
    out = []
    for _ in range(n):
        a, b, c = (rng.choice(words) for _ in range(3))
        out.append(f"The {a} and the {b} are part of our {c} guide for you.")
    return out


def _blob(rng: random.Random, length: int = 32) -> str:
    return "".join(rng.choice(BLOB_ALPHABET) for _ in range(length))


def make_crawl_corpus(
    seed: int,
    sites_per_category: int = 12,
    categories: Sequence[str] = SENSITIVE_CATEGORIES + ("TopK",),
    include_rejects: bool = True,
) -> List[CrawlRecord]:
    """Crawl records with realistic text, tracker chains, and planted syncs."""
    rng = random.Random(seed)
    records: List[CrawlRecord] = []
    for category in sorted(categories):
        words = CATEGORY_WORDS[category]
        for i in range(sites_per_category):
            host = f"{_slug(category)}{i}.example"
            page = f"http://{host}/"
            seq = 0
            requests = [RequestEntry(seq=seq, url=page, request_type="document")]
            seq += 1
            requests.append(
                RequestEntry(
                    seq=seq,
                    url=f"http://{host}/static/style.css",
                    request_type="stylesheet",
                    initiator_url=page,
                )
            )
            seq += 1
            if rng.random() < 0.8:
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url=f"http://{COMMON_TRACKERS[0]}/collect.js",
                        request_type="script",
                        initiator_url=page,
                    )
                )
                seq += 1
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url=f"http://beacon.metricshub.example/ping?site={host}",
                        request_type="image",
                        initiator_url=f"http://{COMMON_TRACKERS[0]}/collect.js",
                    )
                )
                seq += 1
            if rng.random() < 0.6:
                ad_url = f"http://{COMMON_TRACKERS[1]}/ads.js"
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url=ad_url,
                        request_type="script",
                        initiator_url=page,
                    )
                )
                seq += 1
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url=(
                            f"http://{SYNC_PARTNER}/match?usercookie=u{rng.randrange(10**8)}"
                        ),
                        request_type="image",
                        initiator_url=ad_url,
                    )
                )
                seq += 1
                if rng.random() < 0.3:
                    # Keyword key with an obfuscated-only value: not an event.
                    requests.append(
                        RequestEntry(
                            seq=seq,
                            url=f"http://blobsync.example/s?usermatch={_blob(rng)}",
                            request_type="image",
                            initiator_url=ad_url,
                        )
                    )
                    seq += 1
            niche = NICHE_TRACKERS.get(category)
            if niche is not None:
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url=f"http://{niche}/pixel.gif?page={i}",
                        request_type="image",
                        initiator_url=page,
                    )
                )
                seq += 1
            if rng.random() < 0.2:
                requests.append(
                    RequestEntry(
                        seq=seq,
                        url="http://orphan.example/void.gif",
                        request_type="image",
                        initiator_url=None,
                    )
                )
                seq += 1
            html = _page_html(
                title=f"{category} guide {i}",
                keywords=[rng.choice(words) for _ in range(3)],
                sentences=_sentences(rng, words, 8),
            )
            records.append(
                CrawlRecord(
                    page_url=page,
                    final_url=page,
                    fetch_status=200,
                    html=html,
                    requests=tuple(requests),
                    category_label=category,
                )
            )
    if include_rejects:
        records.append(
            CrawlRecord(
                page_url="http://gone.example/",
                final_url="http://gone.example/",
                fetch_status=404,
                html="",
                requests=(),
                category_label="TopK",
            )
        )
        records.append(
            CrawlRecord(
                page_url="http://german.example/",
                final_url="http://german.example/",
                fetch_status=200,
                html=f"<html><body><p>{GERMAN_TEXT}</p></body></html>",
                requests=(
                    RequestEntry(
                        seq=0, url="http://german.example/", request_type="document"
                    ),
                ),
                category_label="TopK",
            )
        )
        records.append(
            CrawlRecord(
                page_url="http://blank.example/",
                final_url="http://blank.example/",
                fetch_status=200,
                html="<html><body></body></html>",
                requests=(
                    RequestEntry(
                        seq=0, url="http://blank.example/", request_type="document"
                    ),
                ),
                category_label="TopK",
            )
        )
    return records


def random_crawl_records(
    seed: int,
    n_sites: int,
    categories: Sequence[str] = SENSITIVE_CATEGORIES + ("TopK",),
    keywords: Sequence[str] = ("usercookie", "usermatch", "sync_uid"),
) -> List[CrawlRecord]:
    """Structurally random logs for oracle-equivalence testing.

    Initiators are drawn from {first party, earlier third-party hosts, none},
    and query strings mix keyword keys, keyword values, obfuscated blobs, and
    plain noise, so every detection clause gets exercised at random.
    """
    rng = random.Random(seed)
    tracker_pool = [f"t{j}.tracker{j % 7}.example" for j in range(20)]
    records: List[CrawlRecord] = []
    for i in range(n_sites):
        host = f"site{i}.example"
        page = f"http://{host}/"
        category = rng.choice(sorted(categories))
        requests = [RequestEntry(seq=0, url=page, request_type="document")]
        seen_tp: List[str] = []
        for seq in range(1, rng.randrange(2, 14)):
            if rng.random() < 0.25:
                dest = f"{host}"
                path = f"/asset{seq}.js"
            else:
                dest = rng.choice(tracker_pool)
                path = f"/r{seq}"
            roll = rng.random()
            if roll < 0.35 or not seen_tp:
                initiator: Optional[str] = page
            elif roll < 0.8:
                initiator = f"http://{rng.choice(seen_tp)}/lib.js"
            else:
                initiator = None
            query = ""
            q_roll = rng.random()
            if q_roll < 0.25:
                query = f"?{rng.choice(sorted(keywords))}=u{rng.randrange(10**6)}"
            elif q_roll < 0.4:
                query = f"?payload={_blob(rng)}&{rng.choice(sorted(keywords))}={_blob(rng)}"
            elif q_roll < 0.55:
                query = f"?ref=v{rng.randrange(100)}&token={rng.choice(sorted(keywords))}z"
            elif q_roll < 0.65:
                query = "?"
            request_type = rng.choice(
                ["script", "image", "xhr", "sub_frame", "stylesheet", "other"]
            )
            requests.append(
                RequestEntry(
                    seq=seq,
                    url=f"http://{dest}{path}{query}",
                    request_type=request_type,
                    initiator_url=initiator,
                )
            )
            if dest != host:
                seen_tp.append(dest)
        records.append(
            CrawlRecord(
                page_url=page,
                final_url=page,
                fetch_status=200,
                html="<html><body><p>the page</p></body></html>",
                requests=tuple(requests),
                category_label=category,
            )
        )
    return records
