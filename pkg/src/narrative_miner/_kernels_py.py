"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same tie-breaking. ``ks_scan`` here is vectorised per
candidate (numpy + scipy's Hurwitz zeta) and abandons candidates block by
block instead of point by point, so abandoned entries can hold a different
(still lower-bound) partial distance than the compiled version.
"""

import numpy as np
from scipy.special import zeta

_BLOCK = 512


def hurwitz(s, q):
    return float(zeta(s, q))


def _candidate_distance(values, counts, start, alpha, zc, ntail, stop_at):
    """Sup distance over the integer support for one candidate."""
    dmax = 0.0
    cum0 = 0.0
    n_values = len(values)
    lo = start
    while lo < n_values:
        hi = min(lo + _BLOCK, n_values)
        u = values[lo:hi]
        cum = cum0 + np.cumsum(counts[lo:hi], dtype=np.float64)
        # model CDF at each u and at the integer just below it
        cdf_at = (zc - zeta(alpha, u + 1.0)) / zc
        cdf_below = (zc - zeta(alpha, u)) / zc
        before = np.concatenate(([cum0], cum[:-1])) / ntail
        gap = np.empty(len(u), dtype=bool)
        gap[1:] = np.diff(u) > 1.0
        gap[0] = lo > start and u[0] - 1.0 > values[lo - 1]
        d_at = np.abs(cum / ntail - cdf_at)
        d_below = np.where(gap, np.abs(before - cdf_below), 0.0)
        dmax = max(dmax, float(d_at.max()), float(d_below.max()))
        if dmax >= stop_at:
            return dmax, True
        cum0 = cum[-1]
        lo = hi
    return dmax, False


def ks_scan(values, counts, candidates, alphas, zeta_min):
    values = np.asarray(values, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    suffix = np.concatenate((np.cumsum(counts[::-1])[::-1], [0]))
    ks = np.full(len(candidates), np.nan)
    best, best_d = -1, np.inf
    for c, start in enumerate(candidates):
        d, abandoned = _candidate_distance(
            values, counts, int(start), float(alphas[c]), float(zeta_min[c]),
            float(suffix[start]), best_d,
        )
        ks[c] = d
        if not abandoned and d < best_d:
            best, best_d = c, d
    return best, ks


def louvain_local_moves(indptr, indices, weights, strength, comm, tot, m2, tol):
    n = len(strength)
    moves = 0
    improved = True
    while improved:
        improved = False
        for i in range(n):
            ci = int(comm[i])
            ki = strength[i]
            link = {}
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if j == i:
                    continue
                cc = int(comm[j])
                link[cc] = link.get(cc, 0.0) + weights[e]
            tot[ci] -= ki
            own = link.get(ci, 0.0) - tot[ci] * ki / m2
            best_c, best_gain = -1, -np.inf
            for cc, w in link.items():
                if cc == ci:
                    continue
                gain = w - tot[cc] * ki / m2
                if gain > best_gain or (gain == best_gain and cc < best_c):
                    best_c, best_gain = cc, gain
            if best_c >= 0 and best_gain > own + tol:
                comm[i] = best_c
                tot[best_c] += ki
                moves += 1
                improved = True
            else:
                tot[ci] += ki
    return moves
