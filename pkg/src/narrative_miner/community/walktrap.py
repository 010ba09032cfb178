"""Walktrap: agglomerative clustering on random-walk distances.

Every vertex gets a self-loop (weight = its mean incident edge weight, 1 for
isolated vertices) so that the transition matrix is aperiodic. Two
communities are merged when adjacent and when merging them adds the least
to the mean squared random-walk distance of vertices to their community
(``delta_sigma``). The returned partition is the dendrogram cut of maximal
modularity.
"""

from __future__ import annotations

import heapq

import numpy as np

from .partition import CommunityError, Partition, as_network


def _walk_probabilities(net, walk_length):
    n = net.n_nodes
    a = net.adjacency().toarray()
    deg = net.node_degrees
    strength = a.sum(axis=1)
    loop = np.where(deg > 0, strength / np.maximum(deg, 1), 1.0)
    a[np.diag_indices(n)] += loop
    d = a.sum(axis=1)
    p = a / d[:, None]
    return np.linalg.matrix_power(p, walk_length), d


def walktrap(graph, walk_length: int = 4) -> Partition:
    net = as_network(graph)
    if walk_length < 1:
        raise CommunityError("walk_length must be >= 1")
    n = net.n_nodes
    pt, d = _walk_probabilities(net, walk_length)
    inv_d = 1.0 / d
    two_m = 2.0 * float(net.weight.sum())

    # community state; ids >= n are created by merges
    prob = {i: pt[i] for i in range(n)}
    size = {i: 1 for i in range(n)}
    strength = {i: s for i, s in enumerate(net.node_strengths)}
    links: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for i, j, w in zip(net.src, net.dst, net.weight.astype(float)):
        links[i][j] = links[i].get(j, 0.0) + w
        links[j][i] = links[j].get(i, 0.0) + w

    def delta_sigma(c1, c2):
        diff = prob[c1] - prob[c2]
        return (size[c1] * size[c2] / (size[c1] + size[c2])) * float(np.dot(diff * diff, inv_d)) / n

    heap = []
    for i in range(n):
        for j in links[i]:
            if i < j:
                heap.append((delta_sigma(i, j), i, j))
    heapq.heapify(heap)

    membership = np.arange(n)
    q = 0.0 if two_m == 0 else -sum((s / two_m) ** 2 for s in strength.values())
    best_q, best_membership = q, membership.copy()
    dendrogram = []
    alive = set(range(n))
    next_id = n
    while heap:
        ds, c1, c2 = heapq.heappop(heap)
        if c1 not in alive or c2 not in alive:
            continue
        new = next_id
        next_id += 1
        w12 = links[c1].get(c2, 0.0)
        q += 2.0 * w12 / two_m - 2.0 * strength[c1] * strength[c2] / two_m**2
        size[new] = size[c1] + size[c2]
        prob[new] = (size[c1] * prob[c1] + size[c2] * prob[c2]) / size[new]
        strength[new] = strength[c1] + strength[c2]
        merged: dict[int, float] = {}
        for old in (c1, c2):
            for k, w in links.pop(old).items():
                if k in (c1, c2):
                    continue
                merged[k] = merged.get(k, 0.0) + w
                del links[k][old]
        links[new] = merged
        for k, w in merged.items():
            links[k][new] = w
        alive -= {c1, c2}
        alive.add(new)
        for c in (c1, c2):
            del prob[c], size[c]
        membership[np.isin(membership, (c1, c2))] = new
        dendrogram.append((c1, c2, new, ds))
        for k in merged:
            heapq.heappush(heap, (delta_sigma(min(k, new), max(k, new)), min(k, new), max(k, new)))
        if q > best_q + 1e-12:
            best_q, best_membership = q, membership.copy()
    return Partition.from_membership(net, best_membership, "walktrap", dendrogram)
