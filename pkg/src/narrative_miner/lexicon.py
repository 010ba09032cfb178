"""Tokenization, document-term matrices and the labeled term dictionary."""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse

from . import _io
from .corpus import Corpus

DEFAULT_TOPICS = ("environment", "health", "diet", "geopolitics")
UNLABELED = "unlabeled"

_TOKEN = re.compile(r"[^\W_]+")


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Normalization:
    casefold: bool = True
    strip_accents: bool = False
    stemmer: Callable[[str], str] | None = None


DEFAULT_NORMALIZATION = Normalization()


def _fold_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def tokenize(
    message: str,
    normalization: Normalization = DEFAULT_NORMALIZATION,
    phrases: "PhraseMatcher | None" = None,
) -> list[str]:
    """Split ``message`` into terms.

    >>> tokenize("Scie Chimiche, scie chimiche!")
    ['scie', 'chimiche', 'scie', 'chimiche']
    """
    if not message:
        return []
    text = message.casefold() if normalization.casefold else message
    if normalization.strip_accents:
        text = _fold_accents(text)
    tokens = _TOKEN.findall(text)
    if normalization.stemmer is not None:
        tokens = [normalization.stemmer(t) for t in tokens]
    if phrases is not None:
        tokens = phrases.merge(tokens)
    return tokens


class PhraseMatcher:
    """Greedy longest-first matching of multi-token terms."""

    def __init__(self, phrases: Iterable[Sequence[str]]):
        self._by_head: dict[str, list[tuple[str, ...]]] = {}
        for ph in {tuple(p) for p in phrases if len(p) > 1}:
            self._by_head.setdefault(ph[0], []).append(ph)
        for group in self._by_head.values():
            group.sort(key=lambda p: (-len(p), p))

    def __bool__(self) -> bool:
        return bool(self._by_head)

    def merge(self, tokens: list[str]) -> list[str]:
        if not self._by_head:
            return tokens
        out = []
        i, n = 0, len(tokens)
        while i < n:
            for ph in self._by_head.get(tokens[i], ()):
                k = len(ph)
                if tuple(tokens[i : i + k]) == ph:
                    out.append(" ".join(ph))
                    i += k
                    break
            else:
                out.append(tokens[i])
                i += 1
        return out


@dataclass(frozen=True)
class TermDictionary:
    entries: dict[str, str]
    labels: tuple[str, ...] = DEFAULT_TOPICS

    def __post_init__(self):
        if UNLABELED in self.labels:
            raise LexiconError(f"{UNLABELED!r} is reserved and cannot be a topic label")
        for term, label in self.entries.items():
            if not term or term != term.strip():
                raise LexiconError(f"invalid term {term!r}")
            if label not in self.labels:
                raise LexiconError(f"label {label!r} of term {term!r} not in {self.labels}")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term) -> bool:
        return term in self.entries

    def label(self, term: str) -> str:
        return self.entries[term]

    @property
    def phrases(self) -> PhraseMatcher:
        return PhraseMatcher(t.split(" ") for t in self.entries)


def normalize_term(term: str, normalization: Normalization = DEFAULT_NORMALIZATION) -> str:
    return " ".join(tokenize(term, normalization))


def load_dictionary(
    path,
    labels: Sequence[str] | None = DEFAULT_TOPICS,
    min_confidence: float = 0.9,
    normalization: Normalization = DEFAULT_NORMALIZATION,
) -> TermDictionary:
    """Read a ``term,label[,confidence]`` CSV (header optional).

    Rows with a confidence below ``min_confidence`` are dropped; rows without
    a confidence value are kept. ``labels=None`` takes the label set from the
    file in order of first appearance.
    """
    entries: dict[str, str] = {}
    seen_labels: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not any(c.strip() for c in row):
                continue
            if lineno == 1 and [c.strip().lower() for c in row[:2]] == ["term", "label"]:
                continue
            if len(row) < 2:
                raise LexiconError(f"dictionary line {lineno}: expected term,label[,confidence]")
            raw, label = row[0], row[1].strip().lower()
            if len(row) > 2 and row[2].strip():
                try:
                    conf = float(row[2])
                except ValueError:
                    raise LexiconError(f"dictionary line {lineno}: bad confidence {row[2]!r}") from None
                if conf < min_confidence:
                    continue
            term = normalize_term(raw, normalization)
            if not term:
                raise LexiconError(f"dictionary line {lineno}: empty term")
            if term in entries:
                raise LexiconError(f"dictionary line {lineno}: duplicate term {term!r}")
            entries[term] = label
            if label not in seen_labels:
                seen_labels.append(label)
    return TermDictionary(entries, tuple(labels) if labels is not None else tuple(seen_labels))


def write_dictionary(path, dictionary: TermDictionary) -> None:
    rows = [(t, lab) for t, lab in dictionary.entries.items()]
    _io.write_csv(path, ("term", "label"), rows)


@dataclass(frozen=True, eq=False)
class DocTermMatrix:
    rows: tuple[str, ...]
    cols: tuple[str, ...]
    counts: sparse.csr_matrix = field(repr=False)
    marginals: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.counts.shape != (len(self.rows), len(self.cols)):
            raise LexiconError("matrix shape does not match row/column labels")
        colsum = np.asarray(self.counts.sum(axis=0)).ravel()
        if not np.array_equal(colsum, self.marginals):
            raise LexiconError("marginals differ from column sums")
        if len(self.cols) and colsum.min() <= 0:
            raise LexiconError("all-zero column in document-term matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def column(self, term: str) -> int:
        return self.cols.index(term)

    def to_dict(self) -> dict[str, dict[str, int]]:
        """``{post_id: {term: count}}`` including empty rows."""
        out = {}
        m = self.counts.tocsr()
        for i, pid in enumerate(self.rows):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            out[pid] = {self.cols[j]: int(v) for j, v in zip(m.indices[lo:hi], m.data[lo:hi])}
        return out

    def equals(self, other: "DocTermMatrix") -> bool:
        return self.rows == other.rows and self.cols == other.cols and (
            (self.counts != other.counts).nnz == 0
        )


def _from_counters(rows, counters: list[Counter], cols: Sequence[str]) -> DocTermMatrix:
    col_index = {t: j for j, t in enumerate(cols)}
    indptr, indices, data = [0], [], []
    for counter in counters:
        items = sorted((col_index[t], c) for t, c in counter.items() if t in col_index)
        indices.extend(j for j, _ in items)
        data.extend(c for _, c in items)
        indptr.append(len(indices))
    m = sparse.csr_matrix(
        (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(rows), len(cols)),
    )
    marg = np.asarray(m.sum(axis=0), dtype=np.int64).ravel()
    return DocTermMatrix(tuple(rows), tuple(cols), m, marg)


def build_dtm(
    corpus: Corpus,
    min_occurrences: int = 500,
    normalization: Normalization = DEFAULT_NORMALIZATION,
    phrases: PhraseMatcher | None = None,
    on_empty: str = "error",
) -> DocTermMatrix:
    """Posts-by-terms counts, keeping terms seen strictly more than
    ``min_occurrences`` times. Empty-message posts are skipped.

    ``on_empty="empty"`` returns a zero-column matrix instead of raising
    when no term passes the threshold.
    """
    if min_occurrences < 1:
        raise LexiconError("min_occurrences must be >= 1")
    rows, counters = [], []
    for post in corpus.messages():
        rows.append(post.post_id)
        counters.append(Counter(tokenize(post.message, normalization, phrases)))
    if not rows:
        raise LexiconError("empty document set")
    totals: Counter = Counter()
    for c in counters:
        totals.update(c)
    cols = sorted(t for t, n in totals.items() if n > min_occurrences)
    if not cols and on_empty == "error":
        raise LexiconError(f"no term occurs more than {min_occurrences} times")
    return _from_counters(rows, counters, cols)


def restrict_to_dictionary(dtm: DocTermMatrix, dictionary: TermDictionary) -> DocTermMatrix:
    keep = [j for j, t in enumerate(dtm.cols) if t in dictionary]
    if not keep:
        raise LexiconError("dictionary disjoint from corpus vocabulary")
    m = dtm.counts.tocsc()[:, keep].tocsr()
    m.sort_indices()
    return DocTermMatrix(dtm.rows, tuple(dtm.cols[j] for j in keep), m, dtm.marginals[keep].copy())


def write_dtm(path, dtm: DocTermMatrix) -> None:
    """Sparse triplets ``post_id,term,count``; posts without any kept term
    appear once as ``post_id,,0`` so the row set survives the round trip."""
    rows = []
    for pid, terms in dtm.to_dict().items():
        if not terms:
            rows.append((pid, "", 0))
        for term, count in terms.items():
            rows.append((pid, term, count))
    _io.write_csv(path, ("post_id", "term", "count"), rows)


def read_dtm(path) -> DocTermMatrix:
    _, body = _io.read_csv(path)
    order: list[str] = []
    counters: dict[str, Counter] = {}
    terms = set()
    for pid, term, count in body:
        if pid not in counters:
            order.append(pid)
            counters[pid] = Counter()
        if term:
            counters[pid][term] += int(count)
            terms.add(term)
    return _from_counters(order, [counters[p] for p in order], sorted(terms))
