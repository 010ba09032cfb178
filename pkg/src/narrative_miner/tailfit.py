"""Empirical CCDFs and discrete power-law fits (lower bound plus exponent).

For every candidate lower bound the exponent is the exact discrete MLE with
Hurwitz-zeta normalisation; the lower bound is the candidate whose fitted
tail is closest to the data in Kolmogorov-Smirnov distance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from . import _io, kernels

logger = logging.getLogger(__name__)

ALPHA_LOW = 1.0 + 1e-6
ALPHA_HIGH = 6.0
METRICS = ("likes", "comments", "shares")


class TailFitError(ValueError):
    pass


@dataclass(frozen=True)
class PowerLawFit:
    x_min: int
    alpha: float
    n_tail: int
    ks_statistic: float
    log_likelihood: float
    n: int
    p_value: float | None = None

    @property
    def sigma(self) -> float:
        """Asymptotic standard error of ``alpha``."""
        return (self.alpha - 1.0) / math.sqrt(self.n_tail)


def ccdf(samples) -> list[tuple[int, float]]:
    """``(x, P(X > x))`` at every distinct sample value."""
    x = np.asarray(samples)
    if x.size == 0:
        raise TailFitError("empty sample")
    values, counts = np.unique(x, return_counts=True)
    above = x.size - np.cumsum(counts)
    return [(v.item(), float(a) / x.size) for v, a in zip(values, above)]


def log_likelihood(samples, alpha: float, x_min: int) -> float:
    x = np.asarray(samples, dtype=float)
    x = x[x >= x_min]
    return float(-alpha * np.log(x).sum() - x.size * math.log(zeta(alpha, x_min)))


def _log_zeta(alpha, q):
    return np.log(zeta(alpha, q))


def _mle_alphas(mean_log: np.ndarray, x_min: np.ndarray, max_iter: int = 60) -> np.ndarray:
    """Discrete MLE of the exponent for many lower bounds at once.

    Solves ``d/da ln zeta(a, x_min) = -mean_log`` by safeguarded Newton,
    derivatives by central differences. The score is monotone in ``a``
    (``ln zeta`` is convex), so a bracket is kept throughout.
    """
    lo = np.full(mean_log.shape, ALPHA_LOW)
    hi = np.full(mean_log.shape, ALPHA_HIGH)
    # continuous approximation as the starting point
    a = 1.0 + 1.0 / np.maximum(mean_log - np.log(x_min - 0.5), 1e-12)
    a = np.clip(a, lo + 1e-3, hi)
    for _ in range(max_iter):
        h = np.minimum(1e-5, (a - 1.0) / 2)
        g0 = _log_zeta(a, x_min)
        gp = _log_zeta(a + h, x_min)
        gm = _log_zeta(a - h, x_min)
        score = -(gp - gm) / (2 * h) - mean_log
        curv = (gp - 2 * g0 + gm) / (h * h)
        lo = np.where(score > 0, a, lo)
        hi = np.where(score <= 0, a, hi)
        step = score / np.maximum(curv, 1e-300)
        nxt = a + step
        outside = (nxt <= lo) | (nxt >= hi) | ~np.isfinite(nxt)
        nxt = np.where(outside, 0.5 * (lo + hi), nxt)
        done = np.abs(nxt - a) < 1e-11
        a = nxt
        if done.all():
            break
    # exponents pinned against the upper bound stay there
    return np.clip(a, ALPHA_LOW, ALPHA_HIGH)


def _refine_alpha(sum_log: float, n_tail: int, x_min: int, start: float) -> float:
    def nll(a):
        return a * sum_log + n_tail * math.log(zeta(a, x_min))

    lo, hi = max(ALPHA_LOW, start - 0.01), min(ALPHA_HIGH, start + 0.01)
    res = minimize_scalar(nll, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x) if nll(res.x) <= nll(start) else start


def _positive_counts(samples) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(samples)
    if x.size == 0:
        raise TailFitError("empty sample")
    if np.any(x < 1) or np.any(x != np.floor(x)):
        raise TailFitError("samples must be positive integers")
    values, counts = np.unique(x.astype(np.int64), return_counts=True)
    return values, counts.astype(np.int64)


def ks_distance(samples, alpha: float, x_min: int) -> float:
    """KS distance between the tail ``>= x_min`` and the fitted power law."""
    values, counts = _positive_counts(samples)
    start = int(np.searchsorted(values, x_min))
    if start >= len(values):
        raise TailFitError("no samples at or above x_min")
    _, ks = kernels.ks_scan(
        values.astype(np.float64), counts, np.array([start], dtype=np.int64),
        np.array([alpha]), np.array([zeta(alpha, x_min)]),
    )
    return float(ks[0])


def fit_power_law(samples, x_min: int | None = None, min_tail: int = 2) -> PowerLawFit:
    """Clauset-style fit: MLE exponent per candidate ``x_min``, KS-minimal bound.

    With ``x_min`` given, only the exponent is estimated. Candidates are the
    distinct sample values whose tail still holds two distinct values and
    ``min_tail`` samples; the smallest ``x_min`` wins KS ties.
    """
    values, counts = _positive_counts(samples)
    n = int(counts.sum())
    if len(values) < 2:
        raise TailFitError("degenerate sample")
    if n < 50:
        logger.warning("power-law fit on only %d samples", n)
    logs = np.log(values.astype(np.float64))
    suffix_n = np.cumsum(counts[::-1])[::-1]
    suffix_log = np.cumsum((counts * logs)[::-1])[::-1]

    if x_min is None:
        idx = np.arange(len(values) - 1)
        idx = idx[suffix_n[idx] >= max(min_tail, 2)]
    else:
        start = int(np.searchsorted(values, x_min))
        if start >= len(values) - 1 and not (start < len(values) and suffix_n[start] >= 2):
            raise TailFitError("fewer than two samples at or above x_min")
        idx = np.array([start])
    if idx.size == 0:
        raise TailFitError("no admissible x_min candidate")

    xm = values[idx].astype(np.float64) if x_min is None else np.array([float(x_min)])
    alphas = _mle_alphas(suffix_log[idx] / suffix_n[idx], xm)
    zmin = zeta(alphas, xm)
    best, _ = kernels.ks_scan(values.astype(np.float64), counts, idx.astype(np.int64), alphas, zmin)
    if best < 0:
        raise TailFitError("KS scan found no candidate")

    start = int(idx[best])
    bound = int(xm[best])
    n_tail = int(suffix_n[start])
    alpha = _refine_alpha(float(suffix_log[start]), n_tail, bound, float(alphas[best]))
    _, one = kernels.ks_scan(
        values.astype(np.float64), counts, np.array([start], dtype=np.int64),
        np.array([alpha]), np.array([zeta(alpha, bound)]),
    )
    ks = float(one[0])
    ll = float(-alpha * suffix_log[start] - n_tail * math.log(zeta(alpha, bound)))
    return PowerLawFit(bound, alpha, n_tail, ks, ll, n)


def sample_power_law(alpha: float, x_min: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws from the discrete power law ``P(x) ~ x**-alpha, x >= x_min``.

    Inverting the asymptotic tail of the Hurwitz zeta gives a starting integer, then each
    draw is moved until ``S(x) <= u < S(x - 1)`` with ``S(x) = P(X > x)``.
    """
    if alpha <= 1:
        raise TailFitError("alpha must exceed 1")
    if x_min < 1:
        raise TailFitError("x_min must be a positive integer")
    u = 1.0 - rng.random(size)  # (0, 1]
    z0 = zeta(alpha, x_min)
    # zeta(a, x + 1) ~ (x + 1/2)**(1 - a) / (a - 1), accurate to O(x**-2)
    x = np.ceil(((alpha - 1.0) * z0 * u) ** (-1.0 / (alpha - 1.0)) - 0.5)
    x = np.clip(x, x_min, 2.0**53)

    def surv(v):
        return zeta(alpha, v + 1.0) / z0

    active = np.arange(size)
    for _ in range(1000):
        xa, ua = x[active], u[active]
        step = (surv(xa) > ua).astype(float) - ((xa > x_min) & (surv(xa - 1.0) <= ua))
        moving = step != 0
        if not moving.any():
            break
        active = active[moving]
        x[active] += step[moving]
    else:  # pragma: no cover
        raise TailFitError("sampler failed to converge")
    return x.astype(np.int64)


def bootstrap_pvalue(
    samples, fit: PowerLawFit, n_boot: int = 100, rng: np.random.Generator | None = None
) -> float:
    """Semi-parametric KS bootstrap goodness-of-fit p-value.

    Each replicate keeps the sample size, draws the tail from the fitted
    law with probability ``n_tail / n`` and resamples the body otherwise,
    then refits from scratch.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    x = np.asarray(samples, dtype=np.int64)
    body = x[x < fit.x_min]
    n = x.size
    hits = 0
    for _ in range(n_boot):
        n_tail = int(rng.binomial(n, fit.n_tail / n)) if body.size else n
        sim = np.concatenate([
            sample_power_law(fit.alpha, fit.x_min, n_tail, rng),
            rng.choice(body, n - n_tail) if body.size else np.zeros(0, np.int64),
        ])
        try:
            ks = fit_power_law(sim).ks_statistic
        except TailFitError:
            continue
        hits += ks >= fit.ks_statistic
    return hits / n_boot


def fit_table_rows(fits: dict[tuple[str, str], PowerLawFit | None]) -> list[list[str]]:
    """Long rows ``group,metric,x_min,alpha,n_tail,ks``; failed fits read NA."""
    rows = []
    for (group, metric), f in sorted(fits.items()):
        if f is None:
            rows.append([group, metric, "NA", "NA", "NA", "NA"])
        else:
            rows.append([group, metric, f.x_min, _io.fmt(f.alpha, 6), f.n_tail, _io.fmt(f.ks_statistic, 6)])
    return rows


def write_fits(path, fits: dict[tuple[str, str], PowerLawFit | None]) -> None:
    _io.write_csv(path, ("group", "metric", "x_min", "alpha", "n_tail", "ks"), fit_table_rows(fits))


def wide_table(
    fits: dict[tuple[str, str], PowerLawFit | None], groups: Sequence[str], metrics: Sequence[str] = METRICS
) -> tuple[list[str], list[list[str]]]:
    """One row per group, an ``(x_min, alpha)`` column pair per metric."""
    header = ["group"]
    for m in metrics:
        header += [f"{m}_x_min", f"{m}_alpha"]
    rows = []
    for g in groups:
        row = [g]
        for m in metrics:
            f = fits.get((g, m))
            row += ["NA", "NA"] if f is None else [str(f.x_min), format(f.alpha, ".2f")]
        rows.append(row)
    return header, rows


def write_ccdf(path, curves: dict[tuple[str, str], Sequence[tuple[int, float]]]) -> None:
    rows = [
        [g, m, x, _io.fmt(p, 12)] for (g, m), pts in sorted(curves.items()) for x, p in pts
    ]
    _io.write_csv(path, ("group", "metric", "x", "ccdf"), rows)
