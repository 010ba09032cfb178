"""Independent reference computations used as test oracles.

Nothing here imports the estimators under test; each function is a direct,
slow transcription of a definition.
"""

from __future__ import annotations

import itertools
import math
import re
import warnings
from collections import Counter

import numpy as np
from scipy import integrate, special


# ---------------------------------------------------------------- lexicon

def brute_tokens(message: str) -> list[str]:
    return re.findall(r"[^\W_]+", message.casefold())


def brute_term_totals(messages: list[str], phrases: list[tuple[str, ...]]) -> Counter:
    """Count terms, treating each multi-word phrase as one token (longest first)."""
    heads: dict[str, list[tuple[str, ...]]] = {}
    for p in sorted(set(phrases), key=lambda p: (-len(p), p)):
        heads.setdefault(p[0], []).append(p)
    total: Counter = Counter()
    for msg in messages:
        toks = brute_tokens(msg)
        i = 0
        while i < len(toks):
            for p in heads.get(toks[i], ()):
                if tuple(toks[i : i + len(p)]) == p:
                    total[" ".join(p)] += 1
                    i += len(p)
                    break
            else:
                total[toks[i]] += 1
                i += 1
    return total


# ---------------------------------------------------------------- networks

def pair_counts(post_terms: list[set[str]]) -> dict[tuple[str, str], int]:
    """O(posts * terms^2) co-occurrence counter over distinct terms per post."""
    out: dict[tuple[str, str], int] = {}
    for terms in post_terms:
        for a, b in itertools.combinations(sorted(terms), 2):
            out[(a, b)] = out.get((a, b), 0) + 1
    return out


def disparity_alpha_quadrature(p: float, k: int) -> float:
    """alpha = 1 - (k - 1) * int_0^p (1 - x)^(k - 2) dx, by adaptive quadrature."""
    if k <= 1:
        return 1.0
    # 1e-14 sits at the roundoff floor; quad may warn it cannot certify it
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda x: (1.0 - x) ** (k - 2), 0.0, p, epsabs=1e-14, epsrel=1e-14, limit=200)
    return 1.0 - (k - 1) * val


def dense_modularity(adj: np.ndarray, membership) -> float:
    """Q = 1/(2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)."""
    a = np.asarray(adj, dtype=float)
    k = a.sum(axis=1)
    two_m = k.sum()
    if two_m == 0:
        return 0.0
    c = np.asarray(membership)
    same = c[:, None] == c[None, :]
    return float(((a - np.outer(k, k) / two_m) * same).sum() / two_m)


def set_partitions(n: int):
    """All partitions of range(n) as restricted-growth membership tuples."""
    def rec(i, m, acc):
        if i == n:
            yield tuple(acc)
            return
        for c in range(m + 1):
            acc.append(c)
            yield from rec(i + 1, max(m, c + 1), acc)
            acc.pop()
    yield from rec(0, 0, [])


def exhaustive_best_modularity(adj: np.ndarray) -> tuple[float, tuple[int, ...]]:
    a = np.asarray(adj, dtype=float)
    n = len(a)
    k = a.sum(axis=1)
    two_m = k.sum()
    if two_m == 0:
        return 0.0, tuple(range(n))
    b = a - np.outer(k, k) / two_m
    best, arg = -np.inf, None
    for memb in set_partitions(n):
        c = np.asarray(memb)
        q = float(b[c[:, None] == c[None, :]].sum() / two_m)
        if q > best + 1e-12:
            best, arg = q, memb
    return best, arg


# ---------------------------------------------------------------- tails

def powerlaw_pmf(x, alpha: float, x_min: int) -> np.ndarray:
    return np.asarray(x, dtype=float) ** (-alpha) / special.zeta(alpha, x_min)


def powerlaw_ccdf(x, alpha: float, x_min: int) -> np.ndarray:
    """P(X > x) = zeta(alpha, x + 1) / zeta(alpha, x_min)."""
    return special.zeta(alpha, np.asarray(x, dtype=float) + 1.0) / special.zeta(alpha, x_min)


def grid_mle_alpha(samples, x_min: int, lo: float = 1.05, hi: float = 5.0, n: int = 4001) -> float:
    """Discrete power-law MLE of alpha by a dense grid then golden refinement."""
    x = np.asarray(samples, dtype=float)
    x = x[x >= x_min]
    sl, nt = np.log(x).sum(), x.size
    grid = np.linspace(lo, hi, n)
    ll = -grid * sl - nt * np.log(special.zeta(grid, x_min))
    i = int(np.argmax(ll))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    g = (math.sqrt(5) - 1) / 2
    f = lambda t: -t * sl - nt * math.log(special.zeta(t, x_min))  # noqa: E731
    for _ in range(200):
        c, d = b - g * (b - a), a + g * (b - a)
        if f(c) > f(d):
            b = d
        else:
            a = c
    return (a + b) / 2


def ks_direct(samples, alpha: float, x_min: int) -> float:
    """Sup over every integer in [x_min, max] of |ECDF - CDF| on the tail."""
    x = np.sort(np.asarray(samples, dtype=np.int64))
    x = x[x >= x_min]
    grid = np.arange(x_min, x.max() + 1)
    ecdf = np.searchsorted(x, grid, side="right") / x.size
    cdf = 1.0 - powerlaw_ccdf(grid, alpha, x_min)
    return float(np.abs(ecdf - cdf).max())


# ---------------------------------------------------------------- survival

def km_direct(durations, observed, t: float) -> float:
    """S(t) = prod over event times t_i < t of (n_i - d_i) / n_i."""
    d = np.asarray(durations, dtype=float)
    o = np.asarray(observed, dtype=bool)
    s = 1.0
    for ti in np.unique(d[o]):
        if ti >= t:
            break
        n_i = np.sum(d >= ti)
        d_i = np.sum((d == ti) & o)
        s *= (n_i - d_i) / n_i
    return s


def gehan_two_sample(d1, d2, o1=None, o2=None) -> tuple[float, float]:
    """Two-group Gehan (w = n_t) statistic ``U / sqrt(V)`` and its two-sided p, by loops."""
    d1, d2 = np.asarray(d1, float), np.asarray(d2, float)
    o1 = np.ones(len(d1), bool) if o1 is None else np.asarray(o1, bool)
    o2 = np.ones(len(d2), bool) if o2 is None else np.asarray(o2, bool)
    times = np.unique(np.concatenate([d1[o1], d2[o2]]))
    u = v = 0.0
    for t in times:
        n1, n2 = np.sum(d1 >= t), np.sum(d2 >= t)
        e1, e2 = np.sum((d1 == t) & o1), np.sum((d2 == t) & o2)
        n, e = n1 + n2, e1 + e2
        w = n
        u += w * (e1 - e * n1 / n)
        if n > 1:
            v += w * w * e * (n1 / n) * (1 - n1 / n) * (n - e) / (n - 1)
    z = u / math.sqrt(v)
    return z, float(2 * special.ndtr(-abs(z)))


def permutation_p_two_sample(d1, d2) -> float:
    """Exact permutation p of |Gehan z| over every relabeling (uncensored)."""
    pooled = np.concatenate([d1, d2])
    n1 = len(d1)
    z0 = abs(gehan_two_sample(d1, d2)[0])
    hits = total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        mask = np.zeros(len(pooled), bool)
        mask[list(idx)] = True
        z = abs(gehan_two_sample(pooled[mask], pooled[~mask])[0])
        hits += z >= z0 - 1e-12
        total += 1
    return hits / total


# ---------------------------------------------------------------- ordinal

def logistic_irls(x, y01, iters: int = 100) -> tuple[float, float]:
    """Logistic regression ``P(y = 1) = expit(a + b x)`` by Newton/IRLS."""
    x = np.asarray(x, float)
    y = np.asarray(y01, float)
    X = np.column_stack([np.ones_like(x), x])
    w = np.zeros(2)
    for _ in range(iters):
        p = special.expit(X @ w)
        g = X.T @ (y - p)
        h = X.T @ (X * (p * (1 - p))[:, None])
        step = np.linalg.solve(h, g)
        w += step
        if np.abs(step).max() < 1e-14:
            break
    return float(w[0]), float(w[1])


def pom_probabilities(alpha, beta: float, x: float) -> np.ndarray:
    """P(Y = j) = expit(a_j - b x) - expit(a_{j-1} - b x), a_0 = -inf, a_K = +inf."""
    cum = [0.0] + [1.0 / (1.0 + math.exp(-(a - beta * x))) for a in alpha] + [1.0]
    return np.diff(cum)


def pom_loglik(alpha, beta: float, x, y) -> float:
    return float(sum(math.log(pom_probabilities(alpha, beta, xi)[yi - 1]) for xi, yi in zip(x, y)))


def pearson(a, b) -> float:
    a = np.asarray(a, float) - np.mean(a)
    b = np.asarray(b, float) - np.mean(b)
    return float((a @ b) / math.sqrt((a @ a) * (b @ b)))
