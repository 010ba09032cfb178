"""Partitions of graph nodes and weighted modularity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._io import read_csv, write_csv
from ..netcore import Backbone, TermNetwork

ALGORITHMS = ("walktrap", "multilevel", "fastgreedy", "reference")


class CommunityError(ValueError):
    pass


def as_network(graph) -> TermNetwork:
    if isinstance(graph, Backbone):
        graph = graph.network()
    if not isinstance(graph, TermNetwork):
        raise TypeError(f"expected TermNetwork or Backbone, got {type(graph).__name__}")
    if graph.n_nodes == 0:
        raise CommunityError("empty graph")
    return graph


def canonical_labels(membership) -> np.ndarray:
    """Relabel community ids 0, 1, ... in order of first appearance."""
    membership = np.asarray(membership)
    _, first, inverse = np.unique(membership, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]


def modularity(net: TermNetwork, membership) -> float:
    """Weighted modularity ``sum_c [W_c / m - (S_c / 2m)^2]``; 0 for edgeless graphs."""
    membership = np.asarray(membership)
    if len(membership) != net.n_nodes:
        raise CommunityError("membership length differs from node count")
    w = net.weight.astype(float)
    m = w.sum()
    if m == 0:
        return 0.0
    labels = canonical_labels(membership)
    c = labels.max() + 1
    inside = labels[net.src] == labels[net.dst]
    internal = np.bincount(labels[net.src[inside]], weights=w[inside], minlength=c)
    strength = np.bincount(labels, weights=net.node_strengths, minlength=c)
    return float(np.sum(internal / m - (strength / (2.0 * m)) ** 2))


@dataclass(frozen=True, eq=False)
class Partition:
    """Community assignment of named nodes, with its weighted modularity.

    ``dendrogram`` (agglomerative algorithms) lists merges as
    ``(community_a, community_b, new_community, score)``; leaves are node
    indices ``0..n-1`` and the ``k``-th merge creates community ``n + k``.
    """

    nodes: tuple[str, ...]
    membership: np.ndarray = field(repr=False)
    modularity: float = float("nan")
    algorithm: str = "reference"
    dendrogram: list | None = field(default=None, repr=False)
    labels: tuple[str, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.membership) != len(self.nodes):
            raise CommunityError("every node must be assigned exactly once")
        if self.algorithm not in ALGORITHMS:
            raise CommunityError(f"unknown algorithm tag {self.algorithm!r}")

    @classmethod
    def from_membership(cls, net: TermNetwork, membership, algorithm: str, dendrogram=None) -> "Partition":
        labels = canonical_labels(membership)
        return cls(net.nodes, labels, modularity(net, labels), algorithm, dendrogram)

    @classmethod
    def from_labels(cls, mapping: dict, nodes=None, net: TermNetwork | None = None) -> "Partition":
        """Reference partition from ``{node: label}``; ids follow label order."""
        if nodes is None:
            nodes = net.nodes if net is not None else tuple(mapping)
        missing = [n for n in nodes if n not in mapping]
        if missing:
            raise CommunityError(f"no reference label for {missing[:5]}")
        names = sorted({mapping[n] for n in nodes})
        ids = {lab: i for i, lab in enumerate(names)}
        membership = np.array([ids[mapping[n]] for n in nodes], dtype=np.int64)
        q = modularity(net, membership) if net is not None else float("nan")
        return cls(tuple(nodes), membership, q, "reference", None, tuple(names))

    @property
    def assignment(self) -> dict[str, int]:
        return {n: int(c) for n, c in zip(self.nodes, self.membership)}

    @property
    def n_communities(self) -> int:
        return int(len(np.unique(self.membership)))

    def communities(self) -> list[set[str]]:
        groups: dict[int, set[str]] = {}
        for n, c in zip(self.nodes, self.membership):
            groups.setdefault(int(c), set()).add(n)
        return [groups[k] for k in sorted(groups)]

    def label_of(self, community: int) -> str:
        return self.labels[community] if self.labels is not None else str(community)


def concordance(partition: Partition, reference: Partition) -> float:
    """Fraction of nodes whose community, under the best one-to-one matching
    of communities to reference classes, equals their reference class."""
    from scipy.optimize import linear_sum_assignment

    if set(partition.nodes) != set(reference.nodes) or len(partition.nodes) != len(reference.nodes):
        raise CommunityError("partitions cover different node sets")
    ref = reference.assignment
    got = np.asarray(partition.membership)
    want = np.array([ref[n] for n in partition.nodes])
    _, gi = np.unique(got, return_inverse=True)
    _, wi = np.unique(want, return_inverse=True)
    table = np.zeros((gi.max() + 1, wi.max() + 1), dtype=np.int64)
    np.add.at(table, (gi.ravel(), wi.ravel()), 1)
    r, c = linear_sum_assignment(table, maximize=True)
    return float(table[r, c].sum()) / len(got)


def write_partition(path, partition: Partition, reference: Partition | None = None) -> None:
    header = ["term", "community_id"]
    ref = None
    if reference is not None:
        header.append("reference_label")
        ref = {n: reference.label_of(c) for n, c in reference.assignment.items()}
    rows = []
    for n, c in zip(partition.nodes, partition.membership):
        row = [n, int(c)]
        if ref is not None:
            row.append(ref.get(n, ""))
        rows.append(row)
    write_csv(path, header, rows)


def read_reference(path, nodes=None, net: TermNetwork | None = None) -> Partition:
    """Reference labels from ``term,label`` or ``term,community_id,reference_label`` CSV."""
    header, body = read_csv(path)
    col = header.index("reference_label") if "reference_label" in header else 1
    mapping = {row[0]: row[col] for row in body}
    return Partition.from_labels(mapping, nodes=nodes, net=net)

