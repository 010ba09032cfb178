"""Term co-occurrence networks and their disparity-filter backbones."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import _io
from .lexicon import DocTermMatrix

logger = logging.getLogger(__name__)


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class BipartiteIncidence:
    """Binary terms-by-posts incidence ``M`` (term present in post)."""

    part_a: tuple[str, ...]
    part_b: tuple[str, ...]
    incidence: sparse.csr_matrix = field(repr=False)

    @classmethod
    def from_dtm(cls, dtm: DocTermMatrix) -> "BipartiteIncidence":
        m = (dtm.counts.T.tocsr() > 0).astype(np.int64)
        return cls(dtm.cols, dtm.rows, m)


@dataclass(frozen=True, eq=False)
class TermNetwork:
    """Weighted undirected graph; edges stored once with ``src < dst``."""

    nodes: tuple[str, ...]
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)
    labels: dict[str, str] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (len(self.src) == len(self.dst) == len(self.weight)):
            raise NetworkError("edge arrays differ in length")
        if len(self.src) and np.any(self.src >= self.dst):
            raise NetworkError("edges must satisfy src < dst (no self-loops)")
        if len(self.weight) and self.weight.min() <= 0:
            raise NetworkError("edge weights must be positive")

    @classmethod
    def from_edges(cls, nodes, edges, labels=None) -> "TermNetwork":
        """Build from ``(u, v, w)`` triples over node names; duplicates add up."""
        nodes = tuple(nodes)
        index = {n: i for i, n in enumerate(nodes)}
        acc: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            i, j = index[u], index[v]
            if i == j:
                raise NetworkError(f"self-loop on {u!r}")
            key = (i, j) if i < j else (j, i)
            acc[key] = acc.get(key, 0) + w
        keys = sorted(acc)
        src = np.array([k[0] for k in keys], dtype=np.int64)
        dst = np.array([k[1] for k in keys], dtype=np.int64)
        wts = np.array([acc[k] for k in keys])
        if wts.size and np.all(wts == np.round(wts)):
            wts = wts.astype(np.int64)
        return cls(nodes, src, dst, wts, labels)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def node_strengths(self) -> np.ndarray:
        s = np.zeros(self.n_nodes)
        np.add.at(s, self.src, self.weight)
        np.add.at(s, self.dst, self.weight)
        return s

    @property
    def node_degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n_nodes)

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric weighted adjacency (float)."""
        n = self.n_nodes
        w = self.weight.astype(float)
        a = sparse.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([self.src, self.dst]), np.concatenate([self.dst, self.src]))),
            shape=(n, n),
        ).tocsr()
        a.sort_indices()
        return a

    def edges(self):
        for i, j, w in zip(self.src, self.dst, self.weight):
            yield self.nodes[i], self.nodes[j], w.item()

    def subgraph_edges(self, mask) -> "TermNetwork":
        mask = np.asarray(mask, dtype=bool)
        return TermNetwork(self.nodes, self.src[mask], self.dst[mask], self.weight[mask], self.labels)


def project_cooccurrence(dtm: DocTermMatrix) -> TermNetwork:
    """Co-occurrence network ``C = M M^T`` of the binary incidence.

    A post contributes 1 to a term pair however often the terms repeat.
    """
    if dtm.shape[0] == 0 or dtm.shape[1] == 0:
        raise NetworkError("empty document-term matrix")
    inc = BipartiteIncidence.from_dtm(dtm)
    if len(inc.part_a) == 1:
        logger.warning("single-term matrix: network has one node and no edges")
    c = sparse.triu(inc.incidence @ inc.incidence.T, k=1).tocoo()
    order = np.lexsort((c.col, c.row))
    return TermNetwork(
        inc.part_a,
        c.row[order].astype(np.int64),
        c.col[order].astype(np.int64),
        c.data[order].astype(np.int64),
    )


def _edge_alphas(net: TermNetwork) -> tuple[np.ndarray, np.ndarray]:
    """alpha of every edge seen from its ``src`` end and from its ``dst`` end."""
    strength = net.node_strengths
    degree = net.node_degrees
    w = net.weight.astype(float)

    def side(node):
        k = degree[node]
        p = w / strength[node]
        a = np.power(1.0 - p, k - 1.0)
        return np.where(k > 1, a, 1.0)

    return side(net.src), side(net.dst)


def disparity_scores(net: TermNetwork) -> dict[tuple[str, str], float]:
    """``alpha_ij = (1 - p_ij)**(k_i - 1)`` for every directed edge i -> j.

    Nodes of degree 1 give alpha = 1 (never significant on their own side).
    """
    a_src, a_dst = _edge_alphas(net)
    out = {}
    for i, j, x, y in zip(net.src, net.dst, a_src, a_dst):
        out[(net.nodes[i], net.nodes[j])] = float(x)
        out[(net.nodes[j], net.nodes[i])] = float(y)
    return out


@dataclass(frozen=True, eq=False)
class Backbone:
    parent: TermNetwork
    retained: np.ndarray = field(repr=False)
    alpha_level: float
    alpha_src: np.ndarray = field(repr=False)
    alpha_dst: np.ndarray = field(repr=False)
    mode: str = "either"

    @property
    def alpha_min(self) -> np.ndarray:
        return np.minimum(self.alpha_src, self.alpha_dst)

    @property
    def n_retained(self) -> int:
        return int(self.retained.sum())

    def retained_edges(self) -> set[tuple[str, str]]:
        nodes = self.parent.nodes
        return {(nodes[i], nodes[j]) for i, j in zip(self.parent.src[self.retained], self.parent.dst[self.retained])}

    def network(self) -> TermNetwork:
        """Filtered network on the full node set."""
        return self.parent.subgraph_edges(self.retained)


def extract_backbone(net: TermNetwork, alpha: float = 0.05, mode: str = "either") -> Backbone:
    """Keep edges significant at level ``alpha``.

    ``mode="either"`` keeps an edge when the smaller of its two directional
    scores is below ``alpha``; ``mode="both"`` needs both below.
    """
    if not 0.0 < alpha < 1.0:
        raise NetworkError("alpha must lie in (0, 1)")
    a_src, a_dst = _edge_alphas(net)
    if mode == "either":
        keep = np.minimum(a_src, a_dst) < alpha
    elif mode == "both":
        keep = np.maximum(a_src, a_dst) < alpha
    else:
        raise NetworkError(f"unknown mode {mode!r}")
    return Backbone(net, keep, alpha, a_src, a_dst, mode)


def write_network(path, net: TermNetwork, backbone: Backbone | None = None) -> None:
    """Edge list ``term_i,term_j,weight[,alpha_min,retained]``.

    Nodes without edges are written as ``term,,0`` rows.
    """
    header = ["term_i", "term_j", "weight"]
    if backbone is not None:
        header += ["alpha_min", "retained"]
        amin = backbone.alpha_min
    rows = []
    for e, (i, j, w) in enumerate(zip(net.src, net.dst, net.weight)):
        row = [net.nodes[i], net.nodes[j], _io.fmt(w.item())]
        if backbone is not None:
            row += [_io.fmt(amin[e], 17), int(backbone.retained[e])]
        rows.append(row)
    for k in np.flatnonzero(net.node_degrees == 0):
        rows.append([net.nodes[k], "", "0"] + (["", ""] if backbone is not None else []))
    _io.write_csv(path, header, rows)


def read_network(path, retained_only: bool = False) -> TermNetwork:
    """Read an edge list written by :func:`write_network`.

    With ``retained_only`` and a ``retained`` column, filtered-out edges are
    dropped but their nodes kept.
    """
    header, body = _io.read_csv(path)
    has_flag = "retained" in header
    flag_col = header.index("retained") if has_flag else None
    nodes: dict[str, None] = {}
    edges = []
    for row in body:
        u, v, w = row[0], row[1], row[2]
        nodes.setdefault(u)
        if not v:
            continue
        nodes.setdefault(v)
        if retained_only and has_flag and row[flag_col] != "1":
            continue
        wf = float(w)
        edges.append((u, v, int(wf) if wf.is_integer() else wf))
    return TermNetwork.from_edges(sorted(nodes), edges)
