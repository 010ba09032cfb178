"""Lifetimes, Kaplan-Meier curves and weighted log-rank (Gehan) tests."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import _io
from .corpus import Corpus
from .lexicon import DEFAULT_TOPICS, UNLABELED

EXACT_LIMIT = 20


class SurvivalError(ValueError):
    pass


@dataclass(frozen=True)
class LifetimeSample:
    durations: np.ndarray = field(repr=False)
    observed: np.ndarray = field(repr=False)
    group: str = ""
    ids: tuple[str, ...] = field(default=(), repr=False)

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        o = np.asarray(self.observed, dtype=bool)
        if d.shape != o.shape:
            raise SurvivalError("durations and observed flags differ in length")
        if d.size and (np.any(d < 0) or not np.all(np.isfinite(d))):
            raise SurvivalError("durations must be finite and non-negative")
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "observed", o)

    @classmethod
    def uncensored(cls, durations, group: str = "") -> "LifetimeSample":
        d = np.asarray(durations, dtype=float)
        return cls(d, np.ones(d.shape, dtype=bool), group)

    def __len__(self) -> int:
        return len(self.durations)


def _span(times) -> tuple[int, int]:
    return min(times), max(times)


def _censor_flags(last: np.ndarray, window_end: int, horizon: float | None) -> np.ndarray:
    if horizon is None:
        return np.ones(last.shape, dtype=bool)
    return last < window_end - horizon


def post_lifetimes(
    corpus: Corpus,
    post_labels: Mapping[str, str],
    topics: Sequence[str] = DEFAULT_TOPICS,
    censor_horizon: float | None = None,
    exclude_zero: bool = False,
) -> dict[str, LifetimeSample]:
    """First-to-last comment span of every labeled post, grouped by topic.

    Posts with fewer than two comments get duration 0. With
    ``censor_horizon`` set, posts whose last comment falls within that many
    seconds of the observation window end are right-censored.
    """
    end = corpus.observation_window[1]
    acc: dict[str, list] = {t: [] for t in topics}
    for post in corpus:
        topic = post_labels.get(post.post_id, UNLABELED)
        if topic not in acc:
            continue
        ts = [t for _, t in post.comments]
        if len(ts) >= 2:
            first, last = _span(ts)
        else:
            first = last = ts[0] if ts else post.created_at
        acc[topic].append((post.post_id, last - first, last))
    return _assemble(acc, end, censor_horizon, exclude_zero)


def user_lifetimes(
    corpus: Corpus,
    post_labels: Mapping[str, str],
    profiles: Mapping | None = None,
    topics: Sequence[str] = DEFAULT_TOPICS,
    censor_horizon: float | None = None,
    exclude_zero: bool = False,
) -> dict[str, LifetimeSample]:
    """First-to-last comment span of users on posts of one topic.

    With ``profiles`` given, a user enters only the group of the topic it is
    polarized toward; otherwise every user commenting on a topic enters
    that topic's group.
    """
    end = corpus.observation_window[1]
    spans: dict[tuple[str, str], list[int]] = {}
    for post in corpus:
        topic = post_labels.get(post.post_id, UNLABELED)
        if topic not in topics:
            continue
        for user, t in post.comments:
            key = (topic, user)
            s = spans.get(key)
            if s is None:
                spans[key] = [t, t]
            else:
                s[0] = min(s[0], t)
                s[1] = max(s[1], t)
    acc: dict[str, list] = {t: [] for t in topics}
    for (topic, user), (first, last) in sorted(spans.items()):
        if profiles is not None:
            prof = profiles.get(user)
            if prof is None or prof.polarization != topic:
                continue
        acc[topic].append((user, last - first, last))
    return _assemble(acc, end, censor_horizon, exclude_zero)


def _assemble(acc, window_end, horizon, exclude_zero) -> dict[str, LifetimeSample]:
    out = {}
    for topic, items in acc.items():
        if exclude_zero:
            items = [it for it in items if it[1] > 0]
        ids = tuple(it[0] for it in items)
        d = np.array([it[1] for it in items], dtype=float)
        last = np.array([it[2] for it in items], dtype=float)
        out[topic] = LifetimeSample(d, _censor_flags(last, window_end, horizon), topic, ids)
    return out


def lifetimes(
    corpus: Corpus,
    unit: str,
    post_labels: Mapping[str, str],
    profiles: Mapping | None = None,
    topics: Sequence[str] = DEFAULT_TOPICS,
    censor_horizon: float | None = None,
    exclude_zero: bool = False,
) -> dict[str, LifetimeSample]:
    if unit == "post":
        out = post_lifetimes(corpus, post_labels, topics, censor_horizon, exclude_zero)
    elif unit == "user":
        out = user_lifetimes(corpus, post_labels, profiles, topics, censor_horizon, exclude_zero)
    else:
        raise SurvivalError(f"unknown unit {unit!r}")
    if not any(len(s) for s in out.values()):
        raise SurvivalError("empty scope")
    return out


@dataclass(frozen=True)
class SurvivalCurve:
    """Product-limit estimate; ``survival[i]`` holds for ``t > times[i]``."""

    times: np.ndarray
    n_risk: np.ndarray
    events: np.ndarray
    survival: np.ndarray
    group: str = ""

    def __call__(self, t):
        """Left-continuous ``S(t)``: product over event times strictly below ``t``."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.times, t, side="left")
        vals = np.concatenate(([1.0], self.survival))[k]
        return vals if vals.ndim else float(vals)

    def points(self) -> list[tuple[float, float, int, int]]:
        return [
            (float(t), float(s), int(n), int(d))
            for t, s, n, d in zip(self.times, self.survival, self.n_risk, self.events)
        ]


def kaplan_meier(sample: LifetimeSample) -> SurvivalCurve:
    """Kaplan-Meier estimate over the event times of ``sample``.

    Between censorings the product telescopes, ``prod (n_i - d_i)/n_i =
    n_after / n_first``, so each factor run is formed with one division; with
    no censoring the curve is exactly ``(n - #{d <= t}) / n``.
    """
    if len(sample) == 0:
        raise SurvivalError("empty sample")
    d, o = sample.durations, sample.observed
    times = np.unique(d[o])
    order = np.sort(d)
    n_risk = len(d) - np.searchsorted(order, times, side="left")
    ev = np.sort(d[o])
    events = (np.searchsorted(ev, times, side="right") - np.searchsorted(ev, times, side="left")).astype(np.int64)
    surv = np.empty(len(times))
    base, n_start = 1.0, None
    for i in range(len(times)):
        if n_start is None or n_risk[i] != n_risk[i - 1] - events[i - 1]:
            # a censoring broke the run: fold the old run into the base
            if n_start is not None:
                base = surv[i - 1]
            n_start = n_risk[i]
        surv[i] = base * ((n_risk[i] - events[i]) / n_start)
    return SurvivalCurve(times, n_risk.astype(np.int64), events, surv, sample.group)


@dataclass(frozen=True)
class LogRankResult:
    statistic: float
    p_value: float
    df: int
    method: str
    observed: np.ndarray = field(repr=False)
    expected: np.ndarray = field(repr=False)
    groups: tuple[str, ...] = ()


def _group_counts(samples: Sequence[LifetimeSample]):
    """Pooled event times with per-group at-risk and event counts."""
    times = np.unique(np.concatenate([s.durations[s.observed] for s in samples]))
    n_gt = np.empty((len(samples), len(times)))
    d_gt = np.empty((len(samples), len(times)))
    for k, s in enumerate(samples):
        n_gt[k] = len(s) - np.searchsorted(np.sort(s.durations), times, side="left")
        ev = np.sort(s.durations[s.observed])
        d_gt[k] = np.searchsorted(ev, times, side="right") - np.searchsorted(ev, times, side="left")
    return times, n_gt, d_gt


def _weights(n_t: np.ndarray, d_t: np.ndarray, weighting: str) -> np.ndarray:
    if weighting == "gehan":
        return n_t.astype(float)
    if weighting == "peto":
        factors = 1.0 - d_t / (n_t + 1.0)
        return np.concatenate(([1.0], np.cumprod(factors)[:-1]))
    if weighting == "logrank":
        return np.ones(len(n_t))
    raise SurvivalError(f"unknown weighting {weighting!r}")


def _variance_weights(w, n_t, d_t):
    return np.where(n_t > 1, w**2 * d_t * (n_t - d_t) / np.maximum(n_t - 1, 1), 0.0)


def gehan_wilcoxon(
    samples: Sequence[LifetimeSample],
    weighting: str = "gehan",
    exact: bool = False,
) -> LogRankResult:
    """Weighted log-rank test across groups.

    Gehan weights ``w = n_t``. For two groups the statistic is the signed
    ``z = U_1 / sqrt(V_11)``; for more it is ``U' V^-1 U`` on ``G - 1``
    degrees of freedom. ``exact`` (two groups, ``n <= 20``) replaces the
    normal p-value by the full permutation distribution of ``|z|``.
    """
    if len(samples) < 2:
        raise SurvivalError("need at least two groups")
    for s in samples:
        if len(s) == 0:
            raise SurvivalError(f"group {s.group!r} is empty")
        if not s.observed.any():
            raise SurvivalError(f"no events in group {s.group!r}")
    times, n_gt, d_gt = _group_counts(samples)
    n_t, d_t = n_gt.sum(axis=0), d_gt.sum(axis=0)
    w = _weights(n_t, d_t, weighting)
    share = n_gt / n_t
    expected = share @ d_t
    observed = d_gt.sum(axis=1)
    u = (d_gt - share * d_t) @ w
    var_t = _variance_weights(w, n_t, d_t)
    n_groups = len(samples)
    v = -np.einsum("t,gt,ht->gh", var_t, share, share)
    v[np.diag_indices(n_groups)] += share @ var_t
    names = tuple(s.group for s in samples)
    if n_groups == 2:
        if v[0, 0] <= 0:
            return LogRankResult(0.0, 1.0, 1, "asymptotic", observed, expected, names)
        z = float(u[0] / math.sqrt(v[0, 0]))
        if exact:
            p = _permutation_p(samples, times, w, var_t, n_t, d_t, z)
            return LogRankResult(z, p, 1, "exact", observed, expected, names)
        p = float(2.0 * stats.norm.sf(abs(z)))
        return LogRankResult(z, min(1.0, p), 1, "asymptotic", observed, expected, names)
    if exact:
        raise SurvivalError("exact mode needs exactly two groups")
    red_u, red_v = u[:-1], v[:-1, :-1]
    chi2 = float(red_u @ np.linalg.pinv(red_v) @ red_u)
    p = float(stats.chi2.sf(chi2, n_groups - 1))
    return LogRankResult(chi2, p, n_groups - 1, "asymptotic", observed, expected, names)


def _permutation_p(samples, times, w, var_t, n_t, d_t, z_obs) -> float:
    """Share of the C(n, n_1) group assignments with ``|z| >= |z_obs|``.

    Pooled risk sets do not depend on the assignment, so ``U_1`` is linear
    and ``V_11`` quadratic in the membership vector: all assignments are
    scored in one matrix product.
    """
    d = np.concatenate([s.durations for s in samples])
    o = np.concatenate([s.observed for s in samples])
    n, n1 = len(d), len(samples[0])
    if n > EXACT_LIMIT:
        raise SurvivalError(f"exact mode limited to n <= {EXACT_LIMIT}")
    at_risk = (d[:, None] >= times[None, :]).astype(float)
    event = (o[:, None] & (d[:, None] == times[None, :])).astype(float)
    contrib = event @ w - at_risk @ (w * d_t / n_t)
    combos = np.array(list(itertools.combinations(range(n), n1)), dtype=np.int64)
    a = np.zeros((len(combos), n))
    a[np.arange(len(combos))[:, None], combos] = 1.0
    u1 = a @ contrib
    frac = (a @ at_risk) / n_t
    v11 = (frac * (1.0 - frac)) @ var_t
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(v11 > 0, u1 / np.sqrt(v11), 0.0)
    return float(np.mean(np.abs(z) >= abs(z_obs) - 1e-12))


def write_curves(path, curves: Mapping[str, SurvivalCurve]) -> None:
    rows = [
        [g, _io.fmt(t, 15), _io.fmt(s, 17), n, d]
        for g, c in curves.items()
        for t, s, n, d in c.points()
    ]
    _io.write_csv(path, ("group", "t", "s_hat", "n_risk", "d"), rows)


def read_groups(path) -> list[LifetimeSample]:
    """Read ``group,duration[,observed]`` rows into one sample per group."""
    header, body = _io.read_csv(path)
    has_obs = len(header) > 2
    acc: dict[str, tuple[list, list]] = {}
    for row in body:
        d, o = acc.setdefault(row[0], ([], []))
        d.append(float(row[1]))
        o.append(row[2].strip().lower() in ("1", "true", "yes") if has_obs else True)
    return [LifetimeSample(np.array(d), np.array(o, dtype=bool), g) for g, (d, o) in acc.items()]


def write_groups(path, samples: Mapping[str, LifetimeSample]) -> None:
    rows = [
        [g, _io.fmt(d, 15), int(o)] for g, s in samples.items() for d, o in zip(s.durations, s.observed)
    ]
    _io.write_csv(path, ("group", "duration", "observed"), rows)
