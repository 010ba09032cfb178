import json
import random

import pytest

from narrative_miner.corpus import Corpus, CorpusError, Post, ingest, parse_timestamp, summarize


def rec(pid, likes=(), comments=(), shares=0, message="hello", page="pg1", created=1000):
    return json.dumps({
        "post_id": pid, "page_id": page, "created_at": created, "message": message,
        "likes": [{"user": u, "t": t} for u, t in likes],
        "comments": [{"user": u, "t": t} for u, t in comments],
        "shares": shares,
    })


def test_three_records_build_consistent_indexes():
    lines = [
        rec("p1", likes=[("u1", 1001)], comments=[("u2", 1002)]),
        rec("p2", likes=[("u1", 1003), ("u3", 1004)], page="pg2"),
        rec("p3", comments=[("u1", 1005)], shares=4),
    ]
    c = ingest(lines)
    assert len(c) == 3
    c.check_indexes()
    assert c.user_index["u1"].liked == ("p1", "p2")
    assert c.user_index["u1"].commented == ("p3",)
    assert c.page_index == {"pg1": ("p1", "p3"), "pg2": ("p2",)}
    assert c.observation_window == (1000, 1005)


def test_duplicate_post_id_names_the_id():
    with pytest.raises(CorpusError, match="'p1'"):
        ingest([rec("p1"), rec("p1")])


@pytest.mark.parametrize("bad, needle", [
    ("{not json", "line 2: malformed"),
    (json.dumps({"post_id": "x"}), "line 2: missing field"),
    (rec("p9", created="yesterday"), "line 2: created_at not parseable"),
    (rec("p9", likes=[("u", "soon")]), "line 2: likes timestamp"),
    (rec("p9", shares=-1), "line 2: shares"),
])
def test_malformed_lines_report_line_number(bad, needle):
    with pytest.raises(CorpusError, match=needle):
        ingest([rec("p0"), bad])


def test_unknown_schema_version():
    with pytest.raises(CorpusError, match="schema_version"):
        ingest([], schema_version="2")


def test_timestamp_forms():
    assert parse_timestamp(1262304000) == 1262304000
    assert parse_timestamp("1262304000") == 1262304000
    assert parse_timestamp(1262304000.0) == 1262304000
    assert parse_timestamp("2010-01-01T00:00:00Z") == 1262304000
    assert parse_timestamp("2010-01-01T01:00:00+01:00") == 1262304000
    for bad in (True, 1.5, "abc", -3, None):
        with pytest.raises(CorpusError):
            parse_timestamp(bad)


def test_summary_counts_distinct_users():
    c = ingest([rec("p1", likes=[("u1", 1), ("u1", 2)])])
    s = summarize(c)
    assert (s.likes, s.likers, s.posts, s.pages) == (2, 1, 1, 1)


def test_empty_corpus_summary_is_zero():
    s = summarize(ingest([]))
    assert all(v == 0 for _, v in s.rows())


def test_empty_message_flagged_not_dropped():
    c = ingest([rec("p1", message=""), rec("p2")])
    assert len(c) == 2
    assert [p.post_id for p in c.messages()] == ["p2"]


def test_synthetic_summary_matches_ledger(synth, synth_files):
    c = ingest(synth_files["corpus"])
    s = summarize(c)
    counts = synth.ledger["counts"]
    for key in ("pages", "posts", "likes", "comments", "shares", "likers", "commenters"):
        assert getattr(s, key) == counts[key], key
    assert sum(1 for _ in c.messages()) == counts["messages"]


def test_round_trip_is_identity(synth_corpus):
    again = ingest(synth_corpus.dumps().splitlines())
    assert again == synth_corpus
    assert again.dumps() == synth_corpus.dumps()


def test_summary_invariant_under_record_order(synth_corpus):
    posts = list(synth_corpus)
    random.Random(3).shuffle(posts)
    assert summarize(Corpus.from_posts(posts)) == summarize(synth_corpus)


def test_every_event_indexed_once(synth_corpus):
    liked = sum(len(a.liked) for a in synth_corpus.user_index.values())
    commented = sum(len(a.commented) for a in synth_corpus.user_index.values())
    s = summarize(synth_corpus)
    assert (liked, commented) == (s.likes, s.comments)


def test_post_record_round_trip():
    p = Post("a", "b", 5, "m", (("u", 6),), (("v", 7),), 2, "science")
    assert ingest([json.dumps(p.to_record())]).posts["a"] == p
