"""Multilevel (Louvain) modularity optimisation.

Each level moves single nodes to the neighbouring community with the best
modularity gain until no move helps, then collapses communities into
super-nodes and repeats on the aggregate graph. The node-moving phase runs
in :func:`narrative_miner.kernels.louvain_local_moves`.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .. import kernels
from .partition import Partition, as_network, canonical_labels


def _local_moves(adj: sparse.csr_matrix):
    n = adj.shape[0]
    strength = np.asarray(adj.sum(axis=1)).ravel()
    m2 = float(strength.sum())
    comm = np.arange(n, dtype=np.int64)
    tot = strength.copy()
    moves = kernels.louvain_local_moves(
        adj.indptr.astype(np.int64),
        adj.indices.astype(np.int64),
        adj.data.astype(np.float64),
        strength,
        comm,
        tot,
        m2,
        1e-12 * m2,
    )
    return comm, moves


def multilevel(graph, return_levels: bool = False):
    """Louvain partition of ``graph``.

    With ``return_levels`` the per-level node partitions are returned too,
    coarsest last.
    """
    net = as_network(graph)
    n = net.n_nodes
    membership = np.arange(n)
    levels = []
    adj = net.adjacency()
    if net.n_edges:
        while True:
            comm, moves = _local_moves(adj)
            if moves == 0:
                break
            comm = canonical_labels(comm)
            membership = comm[membership]
            levels.append(membership.copy())
            s = sparse.csr_matrix(
                (np.ones(len(comm)), (np.arange(len(comm)), comm)), shape=(len(comm), comm.max() + 1)
            )
            adj = (s.T @ adj @ s).tocsr()
            adj.sort_indices()
    part = Partition.from_membership(net, membership, "multilevel")
    if return_levels:
        return part, levels
    return part
