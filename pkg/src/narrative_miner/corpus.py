"""Post/user interaction corpus: loading, validation, indexes and the
dataset breakdown table.

Records are line-delimited JSON, one post per line::

    {"post_id": "p1", "page_id": "pg1", "created_at": 1262304000,
     "message": "...", "likes": [{"user": "u1", "t": 1262304100}],
     "comments": [{"user": "u2", "t": 1262304200}], "shares": 3}

An optional ``"page_category"`` string tags the page (used by the optional
user prefilter in :mod:`narrative_miner.attribution`).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

SCHEMA_VERSIONS = ("1",)
_REQUIRED = ("post_id", "page_id", "created_at", "message", "likes", "comments", "shares")


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Post:
    post_id: str
    page_id: str
    created_at: int
    message: str
    likes: tuple[tuple[str, int], ...] = ()
    comments: tuple[tuple[str, int], ...] = ()
    shares: int = 0
    page_category: str | None = None

    @property
    def has_message(self) -> bool:
        """False for posts flagged as empty-message (skipped by lexicon ops)."""
        return bool(self.message.strip())

    def to_record(self) -> dict:
        rec = {
            "post_id": self.post_id,
            "page_id": self.page_id,
            "created_at": self.created_at,
            "message": self.message,
            "likes": [{"user": u, "t": t} for u, t in self.likes],
            "comments": [{"user": u, "t": t} for u, t in self.comments],
            "shares": self.shares,
        }
        if self.page_category is not None:
            rec["page_category"] = self.page_category
        return rec


@dataclass(frozen=True)
class UserActivity:
    """Post ids a user liked / commented, one entry per event."""

    liked: tuple[str, ...] = ()
    commented: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorpusSummary:
    pages: int = 0
    posts: int = 0
    likes: int = 0
    comments: int = 0
    shares: int = 0
    likers: int = 0
    commenters: int = 0

    def rows(self) -> list[tuple[str, int]]:
        return [
            ("Pages", self.pages),
            ("Posts", self.posts),
            ("Likes", self.likes),
            ("Comments", self.comments),
            ("Shares", self.shares),
            ("Likers", self.likers),
            ("Commenters", self.commenters),
        ]


@dataclass(frozen=True, eq=False)
class Corpus:
    posts: dict[str, Post]
    user_index: dict[str, UserActivity] = field(repr=False)
    page_index: dict[str, tuple[str, ...]] = field(repr=False)
    observation_window: tuple[int, int] | None = None

    @classmethod
    def from_posts(cls, posts: Iterable[Post]) -> "Corpus":
        by_id: dict[str, Post] = {}
        for post in posts:
            if post.post_id in by_id:
                raise CorpusError(f"duplicate post_id {post.post_id!r}")
            by_id[post.post_id] = post
        liked: dict[str, list[str]] = {}
        commented: dict[str, list[str]] = {}
        pages: dict[str, list[str]] = {}
        lo, hi = None, None
        for post in by_id.values():
            pages.setdefault(post.page_id, []).append(post.post_id)
            stamps = [post.created_at]
            for user, t in post.likes:
                liked.setdefault(user, []).append(post.post_id)
                stamps.append(t)
            for user, t in post.comments:
                commented.setdefault(user, []).append(post.post_id)
                stamps.append(t)
            lo = min(stamps) if lo is None else min(lo, *stamps)
            hi = max(stamps) if hi is None else max(hi, *stamps)
        users = sorted(set(liked) | set(commented))
        user_index = {
            u: UserActivity(tuple(liked.get(u, ())), tuple(commented.get(u, ()))) for u in users
        }
        page_index = {p: tuple(ids) for p, ids in sorted(pages.items())}
        window = None if lo is None else (lo, hi)
        return cls(by_id, user_index, page_index, window)

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self) -> Iterator[Post]:
        return iter(self.posts.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.posts == other.posts

    def messages(self) -> Iterator[Post]:
        """Posts carrying a non-empty message."""
        return (p for p in self.posts.values() if p.has_message)

    def check_indexes(self) -> None:
        """Round-trip check of ``user_index``/``page_index`` against posts."""
        rebuilt = Corpus.from_posts(self.posts.values())
        if rebuilt.user_index != self.user_index or rebuilt.page_index != self.page_index:
            raise CorpusError("corpus indexes are inconsistent with posts")

    def dumps(self) -> str:
        return "".join(
            json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True) + "\n"
            for p in self.posts.values()
        )


def parse_timestamp(value, what: str = "timestamp") -> int:
    """Epoch seconds from an int, an integral float, a digit string or ISO 8601."""
    if isinstance(value, bool):
        raise CorpusError(f"{what} not parseable: {value!r}")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, float) and value.is_integer():
        ts = int(value)
    elif isinstance(value, str):
        text = value.strip()
        if text.lstrip("-").isdigit():
            ts = int(text)
        else:
            try:
                dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
            except ValueError:
                raise CorpusError(f"{what} not parseable: {value!r}") from None
            if dt.tzinfo is None:
                dt = dt.replace(tzinfo=timezone.utc)
            ts = int(dt.timestamp())
    else:
        raise CorpusError(f"{what} not parseable: {value!r}")
    if ts < 0:
        raise CorpusError(f"{what} negative: {value!r}")
    return ts


def _events(raw, kind: str) -> tuple[tuple[str, int], ...]:
    if not isinstance(raw, list):
        raise CorpusError(f"{kind} must be a list")
    out = []
    for ev in raw:
        if not isinstance(ev, dict) or "user" not in ev or "t" not in ev:
            raise CorpusError(f"{kind} event must have 'user' and 't'")
        out.append((str(ev["user"]), parse_timestamp(ev["t"], f"{kind} timestamp")))
    out.sort(key=lambda e: (e[1], e[0]))
    return tuple(out)


def parse_record(rec: dict) -> Post:
    if not isinstance(rec, dict):
        raise CorpusError("record is not an object")
    missing = [k for k in _REQUIRED if k not in rec]
    if missing:
        raise CorpusError(f"missing field(s): {', '.join(missing)}")
    shares = rec["shares"]
    if isinstance(shares, bool) or not isinstance(shares, int) or shares < 0:
        raise CorpusError(f"shares must be a non-negative integer, got {shares!r}")
    message = rec["message"]
    if message is None:
        message = ""
    if not isinstance(message, str):
        raise CorpusError("message must be a string")
    category = rec.get("page_category")
    return Post(
        post_id=str(rec["post_id"]),
        page_id=str(rec["page_id"]),
        created_at=parse_timestamp(rec["created_at"], "created_at"),
        message=message,
        likes=_events(rec["likes"], "likes"),
        comments=_events(rec["comments"], "comments"),
        shares=shares,
        page_category=None if category is None else str(category),
    )


def iter_records(source: Iterable[str]) -> Iterator[tuple[int, Post]]:
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed record ({exc.msg})") from None
        try:
            yield lineno, parse_record(rec)
        except CorpusError as exc:
            raise CorpusError(f"line {lineno}: {exc}") from None


def ingest(source, schema_version: str = "1") -> Corpus:
    """Load a corpus from a path or from any iterable of JSON lines."""
    if str(schema_version) not in SCHEMA_VERSIONS:
        raise CorpusError(f"unsupported schema_version {schema_version!r}")
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return ingest(fh, schema_version)
    seen: dict[str, int] = {}
    posts = []
    for lineno, post in iter_records(source):
        if post.post_id in seen:
            raise CorpusError(
                f"line {lineno}: duplicate post_id {post.post_id!r} (first on line {seen[post.post_id]})"
            )
        seen[post.post_id] = lineno
        posts.append(post)
    corpus = Corpus.from_posts(posts)
    s = summarize(corpus)
    logger.info(
        "ingested %d posts, %d likes, %d comments, %d shares", s.posts, s.likes, s.comments, s.shares
    )
    return corpus


def summarize(corpus: Corpus) -> CorpusSummary:
    likers, commenters = set(), set()
    likes = comments = shares = 0
    for post in corpus:
        likes += len(post.likes)
        comments += len(post.comments)
        shares += post.shares
        likers.update(u for u, _ in post.likes)
        commenters.update(u for u, _ in post.comments)
    return CorpusSummary(
        pages=len({p.page_id for p in corpus}),
        posts=len(corpus),
        likes=likes,
        comments=comments,
        shares=shares,
        likers=len(likers),
        commenters=len(commenters),
    )
