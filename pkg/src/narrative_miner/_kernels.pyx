# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Two kernels live here, each mirrored line for line by ``_kernels_py``:

``ks_scan``
    Kolmogorov-Smirnov distance between the empirical tail and the fitted
    discrete power law, for every candidate lower bound, with early abandon
    once a candidate cannot beat the best distance seen so far.
``louvain_local_moves``
    The node-moving phase of multilevel modularity optimisation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, INFINITY

cnp.import_array()

cdef enum:
    DIRECT_GAP = 64
    EM_SHIFT = 32

# B_2j / (2j)! for j = 1..6
cdef double[6] _BERN = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
]


cdef double hurwitz_zeta(double s, double q) noexcept nogil:
    """Hurwitz zeta for s > 1, q >= 1 by Euler-Maclaurin summation."""
    cdef double total = 0.0
    cdef double term, poch, x
    cdef int j
    while q < EM_SHIFT:
        total += pow(q, -s)
        q += 1.0
    x = pow(q, -s)
    total += q * x / (s - 1.0) + 0.5 * x
    poch = s
    term = x / q
    for j in range(6):
        total += _BERN[j] * poch * term
        poch *= (s + 2 * j + 1) * (s + 2 * j + 2)
        term /= q * q
    return total


cdef inline double _gap_mass(double alpha, double a, double b) noexcept nogil:
    """Sum of k**-alpha for integer k in [a, b]; zero when b < a."""
    cdef double s = 0.0
    cdef double k
    if b < a:
        return 0.0
    if b - a < DIRECT_GAP:
        k = a
        while k <= b:
            s += pow(k, -alpha)
            k += 1.0
        return s
    return hurwitz_zeta(alpha, a) - hurwitz_zeta(alpha, b + 1.0)


def ks_scan(const double[::1] values, const cnp.int64_t[::1] counts,
            const cnp.int64_t[::1] candidates, const double[::1] alphas,
            const double[::1] zeta_min):
    """Return ``(best, ks)`` over the candidate lower bounds.

    ``values`` are the sorted distinct sample values, ``counts`` their
    multiplicities. ``candidates`` index into ``values`` in ascending order;
    ``alphas[c]`` and ``zeta_min[c]`` are the fitted exponent and the Hurwitz
    zeta normaliser for candidate ``c``. ``best`` is the position of the
    smallest distance (first one on ties). Abandoned candidates carry the
    partial distance reached, which is a lower bound on their true distance.
    """
    cdef Py_ssize_t n_values = values.shape[0]
    cdef Py_ssize_t n_cand = candidates.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ks_arr = np.full(n_cand, np.nan)
    cdef double[::1] ks = ks_arr
    cdef cnp.int64_t[::1] suffix = np.zeros(n_values + 1, dtype=np.int64)
    cdef Py_ssize_t i, j, c, start
    cdef double best_d = INFINITY
    cdef Py_ssize_t best = -1
    cdef double alpha, zc, ntail, cum, mass, d, dmax, u, prev
    cdef bint abandoned

    for i in range(n_values - 1, -1, -1):
        suffix[i] = suffix[i + 1] + counts[i]

    with nogil:
        for c in range(n_cand):
            start = candidates[c]
            alpha = alphas[c]
            zc = zeta_min[c]
            ntail = <double>suffix[start]
            cum = 0.0
            mass = 0.0
            dmax = 0.0
            abandoned = False
            prev = values[start] - 1.0
            for j in range(start, n_values):
                u = values[j]
                if u - 1.0 > prev:
                    # last integer before u: ECDF unchanged, model mass grown
                    mass += _gap_mass(alpha, prev + 1.0, u - 1.0)
                    d = fabs(cum / ntail - mass / zc)
                    if d > dmax:
                        dmax = d
                mass += pow(u, -alpha)
                cum += <double>counts[j]
                d = fabs(cum / ntail - mass / zc)
                if d > dmax:
                    dmax = d
                if dmax >= best_d:
                    abandoned = True
                    break
                prev = u
            ks[c] = dmax
            if not abandoned and dmax < best_d:
                best_d = dmax
                best = c
    return best, ks_arr


def louvain_local_moves(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                        const double[::1] weights, const double[::1] strength,
                        cnp.int64_t[::1] comm, double[::1] tot, double m2, double tol):
    """Move nodes greedily between communities until no move helps.

    ``comm`` and ``tot`` (community strength totals) are updated in place.
    Nodes are visited in index order; among neighbour communities the best
    gain wins, ties going to the lowest community id, and a node only leaves
    its community for a gain strictly above staying put (by ``tol``).
    Returns the number of moves made.
    """
    cdef Py_ssize_t n = strength.shape[0]
    cdef double[::1] link = np.zeros(n, dtype=np.float64)
    cdef cnp.int64_t[::1] touched = np.empty(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] seen = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i, e, j, t, n_touched
    cdef cnp.int64_t ci, cc, best_c
    cdef double ki, own, gain, best_gain
    cdef long moves = 0
    cdef bint improved = True

    with nogil:
        while improved:
            improved = False
            for i in range(n):
                ci = comm[i]
                ki = strength[i]
                n_touched = 0
                for e in range(indptr[i], indptr[i + 1]):
                    j = indices[e]
                    if j == i:
                        continue
                    cc = comm[j]
                    if not seen[cc]:
                        seen[cc] = 1
                        touched[n_touched] = cc
                        n_touched += 1
                    link[cc] += weights[e]
                tot[ci] -= ki
                own = link[ci] - tot[ci] * ki / m2
                best_c = -1
                best_gain = -INFINITY
                for t in range(n_touched):
                    cc = touched[t]
                    if cc == ci:
                        continue
                    gain = link[cc] - tot[cc] * ki / m2
                    if gain > best_gain or (gain == best_gain and cc < best_c):
                        best_gain = gain
                        best_c = cc
                if best_c >= 0 and best_gain > own + tol:
                    comm[i] = best_c
                    tot[best_c] += ki
                    moves += 1
                    improved = True
                else:
                    tot[ci] += ki
                for t in range(n_touched):
                    cc = touched[t]
                    link[cc] = 0.0
                    seen[cc] = 0
    return moves


def hurwitz(double s, double q):
    """Python-visible Hurwitz zeta, exposed for cross-checks."""
    return hurwitz_zeta(s, q)
