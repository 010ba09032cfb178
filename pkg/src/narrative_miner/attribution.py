"""Topic labels for posts, polarized users, and cross-topic engagement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _io
from .corpus import Corpus
from .lexicon import DEFAULT_TOPICS, UNLABELED, DocTermMatrix, TermDictionary


class AttributionError(ValueError):
    pass


def majority_label(topic_counts: Mapping[str, int]) -> str:
    """Topic with a strict plurality of counts, else ``unlabeled``."""
    positive = {t: c for t, c in topic_counts.items() if c > 0}
    if not positive:
        return UNLABELED
    top = max(positive.values())
    winners = [t for t, c in positive.items() if c == top]
    return winners[0] if len(winners) == 1 else UNLABELED


def label_posts(
    corpus: Corpus,
    dtm: DocTermMatrix,
    dictionary: TermDictionary,
    weighting: str = "presence",
) -> dict[str, str]:
    """Majority-rule topic per post of ``dtm``.

    ``weighting="presence"`` counts each matched dictionary term once per
    post; ``"occurrence"`` counts every occurrence. Ties and posts without
    dictionary terms are ``unlabeled``. Columns outside the dictionary are
    ignored.
    """
    if weighting not in ("presence", "occurrence"):
        raise AttributionError(f"unknown weighting {weighting!r}")
    missing = [p for p in dtm.rows if p not in corpus.posts]
    if missing:
        raise AttributionError(f"matrix rows not in corpus: {missing[:5]}")
    col_topic = [dictionary.entries.get(t) for t in dtm.cols]
    m = dtm.counts.tocsr()
    out = {}
    for i, pid in enumerate(dtm.rows):
        counts = dict.fromkeys(dictionary.labels, 0)
        for j, v in zip(m.indices[m.indptr[i] : m.indptr[i + 1]], m.data[m.indptr[i] : m.indptr[i + 1]]):
            topic = col_topic[j]
            if topic is not None and v > 0:
                counts[topic] += 1 if weighting == "presence" else int(v)
        out[pid] = majority_label(counts)
    return out


def label_counts(post_labels: Mapping[str, str], topics: Sequence[str] = DEFAULT_TOPICS) -> dict[str, int]:
    counts = dict.fromkeys(list(topics) + [UNLABELED], 0)
    for lab in post_labels.values():
        counts[lab] = counts.get(lab, 0) + 1
    return counts


@dataclass
class UserProfile:
    user_id: str
    likes_per_topic: dict[str, int]
    comments_per_topic: dict[str, int]
    total_likes: int = 0
    total_comments: int = 0
    polarization: str | None = None
    first_comment_t: dict[str, int] = field(default_factory=dict)
    last_comment_t: dict[str, int] = field(default_factory=dict)

    @property
    def topic_likes(self) -> int:
        """Likes on labeled posts."""
        return sum(self.likes_per_topic.values())

    @property
    def topics_liked(self) -> int:
        return sum(1 for v in self.likes_per_topic.values() if v > 0)


def classify_users(
    corpus: Corpus,
    post_labels: Mapping[str, str],
    threshold: float = 0.95,
    topics: Sequence[str] = DEFAULT_TOPICS,
    category: str | None = None,
    category_threshold: float = 0.95,
) -> dict[str, UserProfile]:
    """Per-user activity profiles with polarization.

    A user is polarized toward topic ``t`` when ``likes on t / total likes
    >= threshold``; likes on unlabeled posts count in the denominator.
    With ``category`` set, only users with at least ``category_threshold``
    of their likes on pages of that category are profiled.
    """
    if not 0.5 < threshold <= 1.0:
        raise AttributionError("threshold must lie in (0.5, 1]")
    topics = tuple(topics)
    profiles: dict[str, UserProfile] = {}
    in_category: dict[str, int] = {}

    def get(user):
        prof = profiles.get(user)
        if prof is None:
            prof = profiles[user] = UserProfile(user, dict.fromkeys(topics, 0), dict.fromkeys(topics, 0))
        return prof

    for post in corpus:
        topic = post_labels.get(post.post_id, UNLABELED)
        labeled = topic in topics
        for user, _ in post.likes:
            prof = get(user)
            prof.total_likes += 1
            if labeled:
                prof.likes_per_topic[topic] += 1
            if category is not None and post.page_category == category:
                in_category[user] = in_category.get(user, 0) + 1
        for user, t in post.comments:
            prof = get(user)
            prof.total_comments += 1
            if labeled:
                prof.comments_per_topic[topic] += 1
                first = prof.first_comment_t.get(topic)
                prof.first_comment_t[topic] = t if first is None else min(first, t)
                last = prof.last_comment_t.get(topic)
                prof.last_comment_t[topic] = t if last is None else max(last, t)

    out = {}
    for user in sorted(profiles):
        prof = profiles[user]
        if category is not None:
            if prof.total_likes == 0 or in_category.get(user, 0) / prof.total_likes < category_threshold:
                continue
        if prof.total_likes > 0:
            hits = [t for t in topics if prof.likes_per_topic[t] / prof.total_likes >= threshold]
            prof.polarization = hits[0] if len(hits) == 1 else None
        out[user] = prof
    return out


def polarization_table(
    profiles: Mapping[str, UserProfile], topics: Sequence[str] = DEFAULT_TOPICS
) -> list[tuple[str, int, float]]:
    """``(topic, users, percent of polarized users)`` rows, largest first."""
    counts = dict.fromkeys(topics, 0)
    for p in profiles.values():
        if p.polarization is not None:
            counts[p.polarization] += 1
    total = sum(counts.values())
    rows = [(t, c, 100.0 * c / total if total else float("nan")) for t, c in counts.items()]
    rows.sort(key=lambda r: (-r[1], topics.index(r[0])))
    return rows


@dataclass(frozen=True)
class CorrelationMatrix:
    topics: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    n_users: int = 0

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i, j = (self.topics.index(t) for t in pair)
        return float(self.values[i, j])


def pearson_matrix(columns: np.ndarray) -> np.ndarray:
    """Pearson coefficients between the columns; NaN where a column is constant."""
    x = np.asarray(columns, dtype=float)
    centered = x - x.mean(axis=0)
    norms = np.sqrt((centered**2).sum(axis=0))
    k = x.shape[1]
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(k):
            if norms[i] > 0 and norms[j] > 0:
                out[i, j] = float(centered[:, i] @ centered[:, j]) / (norms[i] * norms[j])
    ok = norms > 0
    out[np.ix_(ok, ok)] = np.clip(out[np.ix_(ok, ok)], -1.0, 1.0)
    out[np.diag_indices(k)] = np.where(ok, 1.0, np.nan)
    return out


def topic_correlations(
    profiles: Iterable[UserProfile] | Mapping[str, UserProfile],
    topics: Sequence[str] = DEFAULT_TOPICS,
    polarized_only: bool = False,
) -> CorrelationMatrix:
    """Pearson correlations of per-topic like counts across users.

    Users enter when they have at least one like on a labeled topic (or,
    with ``polarized_only``, when they are polarized).
    """
    if isinstance(profiles, Mapping):
        profiles = profiles.values()
    rows = [
        [p.likes_per_topic.get(t, 0) for t in topics]
        for p in profiles
        if (p.polarization is not None if polarized_only else p.topic_likes > 0)
    ]
    if len(rows) < 2:
        raise AttributionError("need at least two users for correlations")
    return CorrelationMatrix(tuple(topics), pearson_matrix(np.array(rows)), len(rows))


def mobility_data(
    profiles: Iterable[UserProfile] | Mapping[str, UserProfile], min_likes: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """``(likes, topics liked)`` for users with at least ``min_likes`` topic likes."""
    if isinstance(profiles, Mapping):
        profiles = profiles.values()
    pairs = [(p.topic_likes, p.topics_liked) for p in profiles if p.topic_likes >= min_likes]
    if not pairs:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.array(pairs, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def engagement_by_topic_count(
    profiles: Iterable[UserProfile] | Mapping[str, UserProfile],
    n_topics: int = len(DEFAULT_TOPICS),
    min_likes: int = 4,
) -> list[dict]:
    """Box-plot summary of likes per number of distinct topics liked."""
    likes, k = mobility_data(profiles, min_likes)
    out = []
    for bucket in range(1, n_topics + 1):
        vals = likes[k == bucket]
        row = {"topics": bucket, "users": int(len(vals))}
        if len(vals):
            q = np.percentile(vals, [25, 50, 75])
            row.update(min=int(vals.min()), q25=float(q[0]), median=float(q[1]), q75=float(q[2]), max=int(vals.max()))
        else:
            row.update(min=None, q25=None, median=None, q75=None, max=None)
        out.append(row)
    return out


def write_post_labels(path, post_labels: Mapping[str, str]) -> None:
    _io.write_csv(path, ("post_id", "label"), sorted(post_labels.items()))


def read_post_labels(path) -> dict[str, str]:
    _, body = _io.read_csv(path)
    return {r[0]: r[1] for r in body}


def write_user_profiles(path, profiles: Mapping[str, UserProfile]) -> None:
    rows = [
        (u, p.polarization or "", p.total_likes, p.total_comments) for u, p in sorted(profiles.items())
    ]
    _io.write_csv(path, ("user_id", "polarized_topic", "total_likes", "total_comments"), rows)


def write_correlations(path, corr: CorrelationMatrix) -> None:
    rows = [[t] + [_io.fmt(v, 6) for v in corr.values[i]] for i, t in enumerate(corr.topics)]
    _io.write_csv(path, ["topic", *corr.topics], rows)


def write_engagement(path, table: list[dict]) -> None:
    keys = ("topics", "users", "min", "q25", "median", "q75", "max")
    _io.write_csv(path, keys, [[_io.fmt(r[k]) for k in keys] for r in table])
