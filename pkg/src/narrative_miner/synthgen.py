"""Synthetic corpora and statistical fixtures with planted, ledgered truth.

Every random draw comes from a Philox generator keyed by ``(seed, stream)``
through :class:`numpy.random.SeedSequence`, so streams are independent of
each other and of the order in which they are consumed. Per-post message
text uses one stream per post.

The ``paper-shaped`` preset mirrors the headline magnitudes of the studied
dataset at a chosen scale (1/100 by default): 39 pages, about 2,086 posts,
8,640 likers, a 159-term dictionary in four topics.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _io
from .community.partition import Partition
from .corpus import Corpus, Post
from .lexicon import DEFAULT_TOPICS, UNLABELED, TermDictionary
from .netcore import TermNetwork
from .ordinal import simulate_pom
from .survival import LifetimeSample
from .tailfit import sample_power_law

DAY = 86400
T0 = 1262304000  # 2010-01-01T00:00:00Z

# dataset magnitudes the preset scales from
PAPER_TOTALS = {
    "pages": 39, "posts": 208591, "likes": 6659382, "comments": 836591,
    "shares": 16326731, "likers": 864047, "commenters": 226534,
}
TERMS_PER_TOPIC = {"environment": 33, "health": 31, "diet": 14, "geopolitics": 81}
LABELED_POSTS = {"environment": 9137, "health": 8668, "diet": 3762, "geopolitics": 22692}
POLARIZED_USERS = {"environment": 42750, "health": 29587, "diet": 13807, "geopolitics": 146359}
LIKE_TAIL_ALPHA = {"environment": 2.82, "health": 2.68, "diet": 2.84, "geopolitics": 2.36}
SHARE_TAIL = {"environment": (408, 2.62), "health": (435, 2.39), "diet": (358, 2.59), "geopolitics": (407, 2.25)}
POM_INTERCEPTS = (-0.7602, 1.0783, 2.9648)
POM_SLOPE = 0.1141
# mixed users keep more than 1 - 0.95 of their likes on every topic they like
MIXED_MIN_SHARE = 0.051

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


class SynthError(ValueError):
    pass


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, key...)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def quota(total: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``total`` by ``weights``."""
    w = np.asarray(weights, dtype=float)
    if total < 0 or np.any(w < 0) or w.sum() <= 0:
        raise SynthError("quota needs a non-negative total and positive weights")
    raw = total * w / w.sum()
    base = np.floor(raw).astype(int)
    rest = total - base.sum()
    order = sorted(range(len(w)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return base.tolist()


@dataclass
class CorpusSpec:
    """Ground-truth knobs of the corpus generator."""

    topics: tuple[str, ...] = DEFAULT_TOPICS
    n_pages: int = 39
    n_posts: int = 2086
    n_users: int = 8640
    n_commenters: int = 2265
    message_fraction: float = 0.9862
    labeled_fraction: float = 44259 / 205703
    tie_fraction: float = 0.1
    topic_post_weights: dict = field(default_factory=lambda: dict(LABELED_POSTS))
    terms_per_topic: dict = field(default_factory=lambda: dict(TERMS_PER_TOPIC))
    bigram_every: int = 10
    core_term_prob: float = 0.9
    n_filler: int = 400
    cross_topic_prob: float = 0.3
    polarized_fraction: float = 0.2939
    polarized_weights: dict = field(default_factory=lambda: dict(POLARIZED_USERS))
    engaged_fraction: float = 68050 / 864047
    pom_intercepts: tuple = POM_INTERCEPTS
    pom_slope: float = POM_SLOPE
    likes_law: tuple = (2.0, 8, 4)  # (alpha, x_min, shift): likes = k - shift
    background_likes_mean: float = 5.0
    like_tail_alpha: dict = field(default_factory=lambda: dict(LIKE_TAIL_ALPHA))
    share_tail: dict = field(default_factory=lambda: {k: list(v) for k, v in SHARE_TAIL.items()})
    share_tail_prob: float = 0.05
    share_body_mean: float = 40.0
    comments_per_commenter: float = 836591 / 226534
    lifetime_days: dict = field(
        default_factory=lambda: {"environment": 90.0, "health": 70.0, "diet": 40.0, "geopolitics": 120.0}
    )
    background_lifetime_days: float = 60.0
    like_delay_hours: float = 6.0
    window_days: int = 1461
    min_occurrences: int = 5

    def validate(self) -> None:
        def bad(name, why):
            raise SynthError(f"invalid spec field {name!r}: {why}")

        topics = tuple(self.topics)
        if len(set(topics)) != len(topics) or not topics:
            bad("topics", "must be distinct and non-empty")
        if UNLABELED in topics:
            bad("topics", f"{UNLABELED!r} is reserved")
        for name in ("message_fraction", "labeled_fraction", "tie_fraction", "cross_topic_prob", "core_term_prob",
                     "polarized_fraction", "engaged_fraction", "share_tail_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                bad(name, "must lie in [0, 1]")
        if self.polarized_fraction + self.engaged_fraction > 1.0 + 1e-12:
            bad("polarized_fraction", "polarized plus engaged users exceed the population")
        for name in ("topic_post_weights", "terms_per_topic", "polarized_weights", "like_tail_alpha",
                     "share_tail", "lifetime_days"):
            d = getattr(self, name)
            if set(d) != set(topics):
                bad(name, "keys must equal the topic set")
        for name in ("topic_post_weights", "polarized_weights"):
            if any(v <= 0 for v in getattr(self, name).values()):
                bad(name, "weights must be positive")
        if any(int(v) < 1 for v in self.terms_per_topic.values()):
            bad("terms_per_topic", "each topic needs at least one term")
        if any(a <= 1 for a in self.like_tail_alpha.values()):
            bad("like_tail_alpha", "alpha must exceed 1")
        if any(a <= 1 or x < 1 for x, a in self.share_tail.values()):
            bad("share_tail", "alpha must exceed 1 and x_min be positive")
        if self.likes_law[0] <= 1 or self.likes_law[1] - self.likes_law[2] < 4:
            bad("likes_law", "alpha must exceed 1 and likes start at 4 or more")
        if len(self.pom_intercepts) != len(topics) - 1:
            bad("pom_intercepts", "need K - 1 intercepts with K the topic count")
        if any(np.diff(self.pom_intercepts) <= 0):
            bad("pom_intercepts", "must be strictly increasing")
        if self.n_posts < self.n_pages or self.n_pages < 1:
            bad("n_pages", "need 1 <= pages <= posts")
        if self.n_commenters > self.n_users:
            bad("n_commenters", "cannot exceed the user count")
        if self.min_occurrences < 1:
            bad("min_occurrences", "must be positive")
        if self.bigram_every < 0:
            bad("bigram_every", "must be non-negative")


def paper_shaped(scale: float = 0.01) -> CorpusSpec:
    if not 0 < scale <= 1:
        raise SynthError("scale must lie in (0, 1]")

    def sc(key):
        return max(1, round(PAPER_TOTALS[key] * scale))

    return CorpusSpec(
        n_pages=PAPER_TOTALS["pages"],
        n_posts=max(sc("posts"), PAPER_TOTALS["pages"]),
        n_users=sc("likers"),
        n_commenters=sc("commenters"),
        min_occurrences=max(1, round(500 * scale)),
    )


PRESETS = {"paper-shaped": paper_shaped}


def _pseudo_words(n: int, rng: np.random.Generator, taken: set[str]) -> list[str]:
    words = []
    while len(words) < n:
        k = int(rng.integers(2, 5))
        w = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))] for _ in range(k)
        )
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


def _cycler(items: list[str], rng: np.random.Generator):
    """Endless stream over ``items`` in reshuffled rounds (balanced usage)."""
    while True:
        for i in rng.permutation(len(items)):
            yield items[i]


def _take_distinct(cyc, k: int) -> list[str]:
    got: list[str] = []
    while len(got) < k:
        t = next(cyc)
        if t not in got:
            got.append(t)
    return got


def _render(units: list[str], rng: np.random.Generator) -> str:
    """Shuffle message units and dress them with case and punctuation."""
    order = rng.permutation(len(units))
    words = [units[i] for i in order]
    out = []
    for i, w in enumerate(words):
        if i == 0 or rng.random() < 0.08:
            w = w[:1].upper() + w[1:]
        if i < len(words) - 1 and rng.random() < 0.1:
            w += ","
        out.append(w)
    return " ".join(out) + "!?."[int(rng.integers(3))]


def _cdf(weights: np.ndarray) -> np.ndarray:
    c = np.cumsum(weights, dtype=float)
    return c / c[-1]


def _draw(cdf: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), len(cdf) - 1)


@dataclass
class SyntheticCorpus:
    posts: list[Post]
    dictionary: TermDictionary
    ledger: dict

    def corpus(self) -> Corpus:
        return Corpus.from_posts(self.posts)


def generate_corpus(spec: CorpusSpec, seed: int) -> SyntheticCorpus:
    """Build a corpus whose every planted quantity is written to the ledger."""
    spec.validate()
    topics = tuple(spec.topics)

    # vocabulary
    vr = stream(seed, 0)
    taken: set[str] = set()
    entries: dict[str, str] = {}
    topic_terms: dict[str, list[str]] = {}
    for t in topics:
        terms = []
        for i in range(int(spec.terms_per_topic[t])):
            if spec.bigram_every and i % spec.bigram_every == spec.bigram_every - 1:
                terms.append(" ".join(_pseudo_words(2, vr, taken)))
            else:
                terms.append(_pseudo_words(1, vr, taken)[0])
        topic_terms[t] = terms
        entries.update((term, t) for term in terms)
    filler = _pseudo_words(spec.n_filler, vr, taken)
    filler_cdf = _cdf(1.0 / np.arange(1, len(filler) + 1))
    dictionary = TermDictionary(entries, topics)

    # post layout
    lr = stream(seed, 1)
    n_msg = round(spec.n_posts * spec.message_fraction)
    n_lab = round(n_msg * spec.labeled_fraction)
    per_topic = dict(zip(topics, quota(n_lab, [spec.topic_post_weights[t] for t in topics])))
    if min(per_topic.values()) < 1:
        raise SynthError("invalid spec field 'n_posts': some topic gets no labeled post")
    n_tie = round((n_msg - n_lab) * spec.tie_fraction)
    kinds = [t for t in topics for _ in range(per_topic[t])] + ["tie"] * n_tie
    kinds += ["plain"] * (n_msg - n_lab - n_tie) + ["empty"] * (spec.n_posts - n_msg)
    kinds = [kinds[i] for i in lr.permutation(len(kinds))]
    width = len(str(spec.n_posts))
    post_ids = [f"p{i + 1:0{width}d}" for i in range(spec.n_posts)]
    pages = [f"page{(i % spec.n_pages) + 1:02d}" for i in range(spec.n_posts)]
    window = spec.window_days * DAY
    created = (T0 + lr.integers(0, int(0.75 * window), spec.n_posts)).astype(np.int64)

    # dictionary terms per post (sequential pre-pass keeps usage balanced)
    # the first term of each topic is its core term; the rest are cycled
    cyclers = {t: _cycler(topic_terms[t][1:] or topic_terms[t], stream(seed, 2, k)) for k, t in enumerate(topics)}
    tr = stream(seed, 3)
    post_terms: dict[str, dict[str, int]] = {}
    labels: dict[str, str] = {}
    for pid, kind in zip(post_ids, kinds):
        counts: dict[str, int] = {}
        if kind in topics:
            chosen = []
            if tr.random() < spec.core_term_prob:
                chosen.append(topic_terms[kind][0])
            pool = len(topic_terms[kind]) - 1 or 1
            chosen += _take_distinct(cyclers[kind], min(int(tr.integers(2, 5)) - len(chosen), pool))
            for term in chosen:
                counts[term] = 1 + int(tr.random() < 0.2)
            # a stray term from another topic never overturns the plurality
            if len(chosen) >= 2 and tr.random() < spec.cross_topic_prob and len(topics) > 1:
                other = [t for t in topics if t != kind][int(tr.integers(len(topics) - 1))]
                counts[topic_terms[other][int(tr.integers(len(topic_terms[other])))]] = 1
            labels[pid] = kind
        elif kind == "tie":
            pair = tr.choice(len(topics), 2, replace=False)
            k = int(tr.integers(1, 3))
            for ti in pair:
                pool = topic_terms[topics[ti]]
                for j in tr.choice(len(pool), min(k, len(pool)), replace=False):
                    counts[pool[j]] = 1
            # equal distinct-term counts on both sides
            sides = [sum(1 for term in counts if entries[term] == topics[ti]) for ti in pair]
            if sides[0] != sides[1]:  # pragma: no cover - guarded by min(k, len(pool))
                raise SynthError("tie construction failed")
            labels[pid] = UNLABELED
        elif kind == "plain":
            labels[pid] = UNLABELED
        if kind != "empty":
            post_terms[pid] = counts

    totals: dict[str, int] = dict.fromkeys(entries, 0)
    for counts in post_terms.values():
        for term, c in counts.items():
            totals[term] += c
    # top up thin terms by repeating them in own-topic posts that already use
    # them; distinct-term sets, and so every label, stay as drawn
    for term in sorted(t for t, c in totals.items() if c <= spec.min_occurrences):
        hosts = [pid for pid, kind in zip(post_ids, kinds) if kind == entries[term] and term in post_terms[pid]]
        for j in range(spec.min_occurrences + 1 - totals[term] if hosts else 0):
            post_terms[hosts[j % len(hosts)]][term] += 1
            totals[term] += 1
    rare = sorted(t for t, c in totals.items() if c <= spec.min_occurrences)
    if rare:
        raise SynthError(
            f"invalid spec field 'n_posts': {len(rare)} dictionary terms occur at most "
            f"{spec.min_occurrences} times (e.g. {rare[0]!r})"
        )

    messages = {}
    for i, (pid, kind) in enumerate(zip(post_ids, kinds)):
        if kind == "empty":
            messages[pid] = ""
            continue
        mr = stream(seed, 10, i)
        units = [term for term, c in post_terms[pid].items() for _ in range(c)]
        units += [filler[j] for j in _draw(filler_cdf, int(mr.integers(4, 16)), mr)]
        messages[pid] = _render(units, mr)

    # users
    ur = stream(seed, 4)
    n_users = spec.n_users
    n_engaged = round(n_users * spec.engaged_fraction)
    a_law, xmin_law, shift = spec.likes_law
    eng_likes = sample_power_law(a_law, int(xmin_law), n_engaged, ur) - int(shift)
    eng_k = simulate_pom(spec.pom_intercepts, spec.pom_slope, eng_likes, ur) if n_engaged else np.zeros(0, int)
    n_pol_target = round(n_users * spec.polarized_fraction)
    n_light = n_pol_target - int(np.count_nonzero(eng_k == 1))
    if n_light < 0:
        raise SynthError("invalid spec field 'polarized_fraction': below the engaged single-topic users")
    n_background = n_users - n_engaged - n_light
    if n_background < 0:
        raise SynthError("invalid spec field 'engaged_fraction': user classes exceed n_users")

    pol_counts = dict(zip(topics, quota(n_pol_target, [spec.polarized_weights[t] for t in topics])))
    pol_topics = [t for t in topics for _ in range(pol_counts[t])]
    pol_topics = [pol_topics[i] for i in ur.permutation(len(pol_topics))]

    # (class, allocation {topic: likes} or background likes)
    plans: list[tuple[str, dict]] = []
    pol_iter = iter(pol_topics)
    for L, k in zip(eng_likes.tolist(), eng_k.tolist()):
        if k == 1:
            plans.append(("polarized", {next(pol_iter): L}))
            continue
        chosen = [topics[j] for j in sorted(ur.choice(len(topics), k, replace=False))]
        base = max(1, math.ceil(MIXED_MIN_SHARE * L))
        extra = ur.multinomial(L - k * base, np.full(k, 1.0 / k))
        plans.append(("mixed", {t: base + int(e) for t, e in zip(chosen, extra)}))
    for _ in range(n_light):
        plans.append(("polarized", {next(pol_iter): int(ur.integers(1, 4))}))
    bg_p = 1.0 / spec.background_likes_mean
    for _ in range(n_background):
        plans.append(("background", {UNLABELED: int(ur.geometric(bg_p))}))
    order = ur.permutation(len(plans))
    uwidth = len(str(n_users))
    user_ids = [f"u{i + 1:0{uwidth}d}" for i in range(n_users)]
    plans = [plans[i] for i in order]
    engaged_at = {int(p): i for i, p in enumerate(order) if p < n_engaged}

    # like targets: popularity-weighted posts of each scope
    pr = stream(seed, 5)
    scope_posts: dict[str, np.ndarray] = {
        t: np.array([i for i, k in enumerate(kinds) if k == t]) for t in topics
    }
    scope_posts[UNLABELED] = np.array([i for i, k in enumerate(kinds) if k not in topics])
    popularity = np.empty(spec.n_posts)
    for t, idx in scope_posts.items():
        a = spec.like_tail_alpha.get(t, 2.5)
        popularity[idx] = sample_power_law(a, 1, len(idx), pr) if len(idx) else []
    scope_cdf = {t: _cdf(popularity[idx]) for t, idx in scope_posts.items() if len(idx)}

    likes: list[list[tuple[str, int]]] = [[] for _ in range(spec.n_posts)]
    lk = stream(seed, 6)
    delay = spec.like_delay_hours * 3600.0
    for uid, (_, alloc) in zip(user_ids, plans):
        for scope, m in alloc.items():
            targets = scope_posts[scope][_draw(scope_cdf[scope], m, lk)]
            lag = np.rint(lk.exponential(delay, m)).astype(np.int64)
            for p, d in zip(targets.tolist(), lag.tolist()):
                likes[p].append((uid, int(created[p]) + d))

    # comments with planted user lifetimes
    cr = stream(seed, 7)
    comments: list[list[tuple[str, int]]] = [[] for _ in range(spec.n_posts)]
    commenter_idx = np.sort(cr.choice(n_users, spec.n_commenters, replace=False))
    by_time = {}
    for scope, idx in scope_posts.items():
        if scope == UNLABELED:
            idx = np.array([i for i in idx if kinds[i] != "empty"])
        if len(idx):
            o = idx[np.argsort(created[idx], kind="stable")]
            by_time[scope] = (o, created[o], np.cumsum(popularity[o]))
    p_geo = 1.0 / spec.comments_per_commenter
    planted_lifetimes: dict[str, list] = {}
    n_comments = 0
    for ui in commenter_idx.tolist():
        uid = user_ids[ui]
        cls, alloc = plans[ui]
        scopes = [s for s in alloc if s in by_time]
        if not scopes:
            continue
        n_c = int(cr.geometric(p_geo))
        mean_days = spec.lifetime_days[scopes[0]] if cls == "polarized" else spec.background_lifetime_days
        dur = 0 if n_c == 1 else int(round(cr.exponential(mean_days * DAY)))
        earliest = max(int(by_time[s][1][0]) for s in scopes)
        start = max(earliest, int(T0 + cr.integers(int(0.1 * window), int(0.75 * window))))
        times = [start] + sorted((start + cr.integers(0, dur + 1, max(0, n_c - 2))).tolist())
        if n_c > 1:
            times.append(start + dur)
        for tau in times:
            scope = scopes[int(cr.integers(len(scopes)))] if len(scopes) > 1 else scopes[0]
            o, ct, cw = by_time[scope]
            avail = int(np.searchsorted(ct, tau, side="right"))
            if avail == 0:
                scope = next(s for s in scopes if by_time[s][1][0] <= tau)
                o, ct, cw = by_time[scope]
                avail = int(np.searchsorted(ct, tau, side="right"))
            j = min(int(np.searchsorted(cw[:avail], cr.random() * cw[avail - 1], side="right")), avail - 1)
            comments[int(o[j])].append((uid, int(tau)))
            n_comments += 1
        if cls == "polarized":
            planted_lifetimes[uid] = [scopes[0], dur]

    # shares: planted body below x_min, power-law tail above
    sr = stream(seed, 8)
    shares = np.empty(spec.n_posts, dtype=np.int64)
    for i, kind in enumerate(kinds):
        x_min, a = spec.share_tail.get(kind, (400, 2.4))
        if sr.random() < spec.share_tail_prob:
            shares[i] = sample_power_law(a, int(x_min), 1, sr)[0]
        else:
            shares[i] = min(int(x_min) - 1, int(sr.geometric(1.0 / spec.share_body_mean)) - 1)

    posts = [
        Post(
            pid, pages[i], int(created[i]), messages[pid],
            tuple(sorted(likes[i], key=lambda e: (e[1], e[0]))),
            tuple(sorted(comments[i], key=lambda e: (e[1], e[0]))),
            int(shares[i]),
        )
        for i, pid in enumerate(post_ids)
    ]

    n_likes = sum(sum(a.values()) for _, a in plans)
    ledger = {
        "seed": seed,
        "spec": _jsonable(asdict(spec)),
        "counts": {
            "pages": spec.n_pages,
            "posts": spec.n_posts,
            "likes": n_likes,
            "comments": n_comments,
            "shares": int(shares.sum()),
            "likers": n_users,
            "commenters": int(sum(1 for ui in commenter_idx if any(s in by_time for s in plans[ui][1]))),
            "messages": n_msg,
            "labeled_posts": {t: per_topic[t] for t in topics},
            "tie_posts": n_tie,
        },
        "min_occurrences": spec.min_occurrences,
        "dictionary": entries,
        "post_labels": labels,
        "post_terms": post_terms,
        "polarization": {
            "counts": pol_counts,
            "users": {uid: next(iter(a)) for uid, (c, a) in zip(user_ids, plans) if c == "polarized"},
        },
        "pom": {
            "intercepts": list(spec.pom_intercepts),
            "slope": spec.pom_slope,
            "likes_law": list(spec.likes_law),
            "users": {
                user_ids[engaged_at[i]]: [int(eng_likes[i]), int(eng_k[i])] for i in range(n_engaged)
            },
        },
        "lifetimes": {"mean_days": dict(spec.lifetime_days), "users": planted_lifetimes},
        "engagement": {
            "like_popularity_alpha": dict(spec.like_tail_alpha),
            "share_tail": {k: list(v) for k, v in spec.share_tail.items()},
            "share_tail_prob": spec.share_tail_prob,
        },
    }
    return SyntheticCorpus(posts, dictionary, ledger)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


PIPELINE_INI = """[pipeline]
corpus = corpus.jsonl
dictionary = dictionary.csv
reference = dictionary.csv
out = run
min_occurrences = {min_occurrences}
alpha = 0.05
algorithms = walktrap,multilevel,fastgreedy
threshold = 0.95
K = {K}
seed = {seed}
"""


def write_synthetic(out_dir, synth: SyntheticCorpus, seed: int) -> dict[str, Path]:
    """Write corpus, dictionary, ledger and a ready-to-run pipeline config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "dictionary": out / "dictionary.csv",
        "ledger": out / "ledger.json",
        "config": out / "pipeline.ini",
    }
    _io.atomic_write_text(paths["corpus"], Corpus.from_posts(synth.posts).dumps())
    rows = [(t, lab, "1.0") for t, lab in synth.dictionary.entries.items()]
    _io.write_csv(paths["dictionary"], ("term", "label", "confidence"), rows)
    _io.atomic_write_text(paths["ledger"], dumps_json(synth.ledger))
    _io.atomic_write_text(
        paths["config"],
        PIPELINE_INI.format(
            min_occurrences=synth.ledger["min_occurrences"], K=len(synth.dictionary.labels), seed=seed
        ),
    )
    return paths


# ---------------------------------------------------------------------------
# focused fixtures


def planted_partition_graph(
    blocks: Sequence[int],
    p_in: float,
    p_out: float,
    seed: int,
    weight_alpha: float = 2.0,
    n_between: int | None = None,
    labels: Sequence[str] | None = None,
) -> tuple[TermNetwork, Partition]:
    """Block-model graph with heavy-tailed weights inside blocks.

    Within-block pairs connect with probability ``p_in`` and weight drawn
    from a discrete power law (``x_min = 1``); between-block pairs connect
    with probability ``p_out`` (or exactly ``n_between`` of them) at weight 1.
    """
    if not p_in > p_out:
        raise SynthError("p_in must exceed p_out")
    rng = stream(seed, 20)
    sizes = [int(b) for b in blocks]
    labels = list(labels) if labels is not None else [f"block{i}" for i in range(len(sizes))]
    width = len(str(sum(sizes)))
    nodes = [f"n{i:0{width}d}" for i in range(sum(sizes))]
    block_of = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(len(nodes), k=1)
    same = block_of[iu] == block_of[ju]
    keep_in = same & (rng.random(len(iu)) < p_in)
    edges = []
    w_in = sample_power_law(weight_alpha, 1, int(keep_in.sum()), rng)
    edges += [(nodes[i], nodes[j], int(w)) for i, j, w in zip(iu[keep_in], ju[keep_in], w_in)]
    cross = np.flatnonzero(~same)
    if n_between is None:
        chosen = cross[rng.random(len(cross)) < p_out]
    else:
        chosen = np.sort(rng.choice(cross, n_between, replace=False))
    edges += [(nodes[iu[e]], nodes[ju[e]], 1) for e in chosen]
    net = TermNetwork.from_edges(nodes, edges)
    ref = Partition.from_labels({n: labels[b] for n, b in zip(nodes, block_of)}, nodes=nodes, net=net)
    return net, ref


def bridged_cliques(
    clique_size: int = 4, n_cliques: int = 4, bridge_weight: int = 2
) -> tuple[TermNetwork, Partition]:
    """Ring of unit-weight cliques plus one heavier edge between the first two.

    Each clique ``c`` links node 1 to node 2 of clique ``c + 1`` (mod ring)
    at weight 1. The extra edge joins node 0 of cliques 0 and 1 with
    ``bridge_weight``. Its endpoints have the lowest strength-to-weight ratio
    in the graph, so the first greedy agglomeration step crosses the cut.
    """
    if clique_size < 3 or n_cliques < 3:
        raise SynthError("need at least 3 cliques of at least 3 nodes")
    nodes = [f"c{b}_{i}" for b in range(n_cliques) for i in range(clique_size)]
    edges = [
        (f"c{b}_{i}", f"c{b}_{j}", 1)
        for b in range(n_cliques)
        for i in range(clique_size)
        for j in range(i + 1, clique_size)
    ]
    edges += [(f"c{b}_1", f"c{(b + 1) % n_cliques}_2", 1) for b in range(n_cliques)]
    edges.append(("c0_0", "c1_0", int(bridge_weight)))
    net = TermNetwork.from_edges(nodes, edges)
    ref = Partition.from_labels({n: n.split("_")[0] for n in nodes}, nodes=nodes, net=net)
    return net, ref


def heterogeneous_network(
    n_nodes: int = 400, mean_degree: float = 12.0, seed: int = 0, weight_alpha: float = 1.8
) -> TermNetwork:
    """Random graph whose weights span several decades (power-law, ``x_min = 1``)."""
    rng = stream(seed, 21)
    p = mean_degree / max(n_nodes - 1, 1)
    iu, ju = np.triu_indices(n_nodes, k=1)
    keep = rng.random(len(iu)) < p
    w = sample_power_law(weight_alpha, 1, int(keep.sum()), rng)
    width = len(str(n_nodes))
    nodes = [f"v{i:0{width}d}" for i in range(n_nodes)]
    return TermNetwork.from_edges(nodes, zip((nodes[i] for i in iu[keep]), (nodes[j] for j in ju[keep]), w.tolist()))


@dataclass
class CohortFixture:
    corpus: Corpus
    post_labels: dict[str, str]
    planted: dict[str, str | None]
    counts: dict[str, int]


def polarized_cohort(
    n_users: int = 8640,
    weights: Mapping[str, float] = POLARIZED_USERS,
    seed: int = 0,
    polarized_fraction: float = 0.2939,
    posts_per_topic: int = 40,
) -> CohortFixture:
    """Users with planted polarization, including threshold boundary cases.

    Polarized users put between 95% (e.g. 19 of 20) and 100% of their likes
    on one topic, the rest on other topics or unlabeled posts. The others
    stay below 95% on every topic (e.g. 18 of 20, or an even split).
    """
    topics = tuple(weights)
    rng = stream(seed, 22)
    posts_by_scope = {
        s: [f"{s[:3]}{j:03d}" for j in range(posts_per_topic)] for s in topics + (UNLABELED,)
    }
    n_pol = round(n_users * polarized_fraction)
    counts = dict(zip(topics, quota(n_pol, list(weights.values()))))
    assignment = [t for t in topics for _ in range(counts[t])] + [None] * (n_users - n_pol)
    assignment = [assignment[i] for i in rng.permutation(n_users)]
    width = len(str(n_users))
    likes: dict[str, list] = {p: [] for ps in posts_by_scope.values() for p in ps}
    planted = {}
    for u, topic in enumerate(assignment):
        uid = f"c{u:0{width}d}"
        planted[uid] = topic
        total = int(rng.choice([20, 40, 100]))
        if topic is not None:
            off = int(rng.integers(0, total // 20 + 1))  # at most 5% elsewhere
            alloc = {topic: total - off}
            others = [s for s in topics + (UNLABELED,) if s != topic]
            for _ in range(off):
                s = others[int(rng.integers(len(others)))]
                alloc[s] = alloc.get(s, 0) + 1
        else:
            t1, t2 = rng.choice(len(topics), 2, replace=False)
            if rng.random() < 0.5:
                top = total - total // 20 - 1  # one like short of the boundary
                alloc = {topics[t1]: top, topics[t2]: total - top}
            else:
                alloc = {topics[t1]: total // 2, topics[t2]: total - total // 2}
        for s, m in alloc.items():
            for p in rng.choice(posts_by_scope[s], m):
                likes[p].append((uid, T0 + int(rng.integers(0, 365 * DAY))))
    posts = []
    labels = {}
    for s, ps in posts_by_scope.items():
        for p in ps:
            posts.append(Post(p, "page01", T0, f"post {p}", tuple(sorted(likes[p], key=lambda e: (e[1], e[0])))))
            labels[p] = s
    return CohortFixture(Corpus.from_posts(posts), labels, planted, counts)


def lognormal_latent_correlation(r: float, sigma: float) -> float:
    """Latent Gaussian correlation giving Pearson ``r`` between two lognormals."""
    return math.log1p(r * math.expm1(sigma**2)) / sigma**2


def correlated_counts(
    n: int, corr: np.ndarray, seed: int, mean: float = 20.0, sigma: float = 0.5
) -> np.ndarray:
    """Non-negative integer counts with a planted Pearson correlation matrix.

    Gaussian copula on lognormal intensities ``mean * exp(sigma Z - sigma^2/2)``
    rounded to integers; the latent correlation is inverted from the target
    so that the lognormal (and, up to rounding noise, the counts) carry it.
    """
    corr = np.asarray(corr, dtype=float)
    latent = np.vectorize(lambda r: lognormal_latent_correlation(r, sigma))(corr)
    np.fill_diagonal(latent, 1.0)
    rng = stream(seed, 23)
    z = rng.multivariate_normal(np.zeros(len(corr)), latent, size=n, method="cholesky")
    return np.rint(mean * np.exp(sigma * z - sigma**2 / 2)).astype(np.int64)


def lifetime_cohorts(
    mean_days: Mapping[str, float], size: int, seed: int, replicate: int = 0
) -> list[LifetimeSample]:
    """Exponential lifetimes (whole seconds) per group, all observed."""
    rng = stream(seed, 24, replicate)
    return [
        LifetimeSample.uncensored(np.rint(rng.exponential(m * DAY, size)), g) for g, m in mean_days.items()
    ]


@dataclass
class PlantedPosts:
    corpus: Corpus
    dictionary: TermDictionary
    labels: dict[str, str]
    has_plurality: dict[str, bool]


def planted_posts(n_posts: int = 10000, seed: int = 0, tie_fraction: float = 0.3) -> PlantedPosts:
    """Posts with dictionary terms drawn so that either one topic holds a
    strict plurality of distinct terms or two topics tie for the top."""
    topics = DEFAULT_TOPICS
    vr = stream(seed, 25)
    taken: set[str] = set()
    pools = {t: _pseudo_words(TERMS_PER_TOPIC[t], vr, taken) for t in topics}
    filler = _pseudo_words(50, vr, taken)
    entries = {w: t for t, ws in pools.items() for w in ws}
    labels, plural, posts = {}, {}, []
    width = len(str(n_posts))
    for i in range(n_posts):
        rng = stream(seed, 26, i)
        counts = np.zeros(len(topics), dtype=int)
        if rng.random() < tie_fraction:
            top = int(rng.integers(1, 4))
            a, b = rng.choice(len(topics), 2, replace=False)
            counts[[a, b]] = top
            for o in range(len(topics)):
                if o not in (a, b):
                    counts[o] = int(rng.integers(0, top))
        else:
            top = int(rng.integers(1, 6))
            w = int(rng.integers(len(topics)))
            counts[w] = top
            for o in range(len(topics)):
                if o != w:
                    counts[o] = int(rng.integers(0, top))
        units = []
        for t, c in zip(topics, counts):
            chosen = rng.choice(pools[t], c, replace=False)
            # repeats must not matter under presence weighting
            units += [w for w in chosen for _ in range(int(rng.integers(1, 3)))]
        units += list(rng.choice(filler, int(rng.integers(0, 6))))
        pid = f"q{i:0{width}d}"
        winners = np.flatnonzero(counts == counts.max())
        plural[pid] = len(winners) == 1
        labels[pid] = topics[winners[0]] if len(winners) == 1 else UNLABELED
        posts.append(Post(pid, "page01", T0, _render(units, rng) if units else "nothing here"))
    return PlantedPosts(Corpus.from_posts(posts), TermDictionary(entries, topics), labels, plural)
