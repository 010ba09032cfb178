"""Greedy hierarchical agglomeration by modularity gain (Clauset-Newman-Moore).

Starting from singletons, the adjacent pair with the largest gain
``dQ = 2 (e_ij - a_i a_j)`` is merged, down to one community per connected
component; the cut with maximal modularity is returned.
"""

from __future__ import annotations

import heapq

import numpy as np

from .partition import Partition, as_network


def fastgreedy(graph) -> Partition:
    net = as_network(graph)
    n = net.n_nodes
    two_m = 2.0 * float(net.weight.sum())
    membership = np.arange(n)
    if two_m == 0:
        return Partition.from_membership(net, membership, "fastgreedy", [])

    a = {i: s / two_m for i, s in enumerate(net.node_strengths)}
    e: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for i, j, w in zip(net.src, net.dst, net.weight.astype(float)):
        e[i][j] = e[i].get(j, 0.0) + w / two_m
        e[j][i] = e[j].get(i, 0.0) + w / two_m

    def gain(i, j):
        return 2.0 * (e[i][j] - a[i] * a[j])

    # max-heap via negated gain; ties resolved by (low id, high id)
    heap = [(-gain(i, j), i, j) for i in range(n) for j in e[i] if i < j]
    heapq.heapify(heap)
    q = -sum(v * v for v in a.values())
    best_q, best_membership = q, membership.copy()
    dendrogram = []
    next_id = n
    while heap:
        neg, i, j = heapq.heappop(heap)
        if i not in e or j not in e or j not in e[i] or -neg != gain(i, j):
            continue
        new = next_id
        next_id += 1
        q -= neg
        row: dict[int, float] = {}
        for old in (i, j):
            for k, v in e.pop(old).items():
                if k in (i, j):
                    continue
                row[k] = row.get(k, 0.0) + v
                del e[k][old]
        e[new] = row
        for k, v in row.items():
            e[k][new] = v
        a[new] = a.pop(i) + a.pop(j)
        membership[np.isin(membership, (i, j))] = new
        dendrogram.append((i, j, new, -neg))
        for k in row:
            lo, hi = min(k, new), max(k, new)
            heapq.heappush(heap, (-gain(lo, hi), lo, hi))
        if q > best_q + 1e-12:
            best_q, best_membership = q, membership.copy()
    return Partition.from_membership(net, best_membership, "fastgreedy", dendrogram)
