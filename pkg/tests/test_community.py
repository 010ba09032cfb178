import itertools

import numpy as np
import pytest

from narrative_miner import synthgen
from narrative_miner.community import (
    DETECTORS,
    CommunityError,
    Partition,
    concordance,
    fastgreedy,
    modularity,
    multilevel,
    read_reference,
    walktrap,
    write_partition,
)
from narrative_miner.netcore import TermNetwork
from oracles import dense_modularity, exhaustive_best_modularity


def dense(net):
    return net.adjacency().toarray()


def two_cliques():
    a = [f"a{i}" for i in range(5)]
    b = [f"b{i}" for i in range(5)]
    edges = [(u, v, 1) for grp in (a, b) for u, v in itertools.combinations(grp, 2)]
    edges.append(("a0", "b0", 1))
    return TermNetwork.from_edges(a + b, edges), a, b


@pytest.fixture(scope="module")
def cliques_oracle():
    net, _, _ = two_cliques()
    return exhaustive_best_modularity(dense(net))


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_two_cliques_split(algo, cliques_oracle):
    net, a, b = two_cliques()
    part = DETECTORS[algo](net)
    assert sorted(map(sorted, part.communities())) == [sorted(a), sorted(b)]
    best, arg = cliques_oracle
    assert part.modularity == pytest.approx(best, abs=1e-12)
    assert len(set(arg)) == 2


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_single_clique_is_one_community(algo):
    nodes = list("abcde")
    net = TermNetwork.from_edges(nodes, [(u, v, 1) for u, v in itertools.combinations(nodes, 2)])
    assert DETECTORS[algo](net).n_communities == 1


def test_triangle_fastgreedy():
    net = TermNetwork.from_edges("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)])
    assert fastgreedy(net).n_communities == 1


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_edgeless_graph_gives_singletons(algo):
    net = TermNetwork.from_edges("abcd", [])
    part = DETECTORS[algo](net)
    assert part.n_communities == 4 and part.modularity == 0.0


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_empty_graph_rejected(algo):
    with pytest.raises(CommunityError):
        DETECTORS[algo](TermNetwork.from_edges([], []))


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_stored_modularity_matches_dense_oracle(algo):
    net = synthgen.heterogeneous_network(120, 6.0, seed=3)
    part = DETECTORS[algo](net)
    assert part.modularity == pytest.approx(dense_modularity(dense(net), part.membership), abs=1e-12)
    assert part.modularity >= modularity(net, np.arange(net.n_nodes)) - 1e-12


@pytest.mark.parametrize("algo", sorted(DETECTORS))
def test_node_permutation_invariance(algo):
    net, ref = synthgen.planted_partition_graph([12, 10, 8], 0.7, 0.05, seed=2)
    perm = np.random.default_rng(0).permutation(net.n_nodes)
    nodes = [net.nodes[i] for i in perm]
    shuffled = TermNetwork.from_edges(nodes, net.edges())
    a, b = DETECTORS[algo](net), DETECTORS[algo](shuffled)
    b_as_ref = Partition.from_labels({n: str(c) for n, c in b.assignment.items()}, nodes=net.nodes)
    assert concordance(a, b_as_ref) == 1.0


@pytest.mark.parametrize("algo", ["walktrap", "fastgreedy"])
def test_dendrogram_merges_one_pair_per_step(algo):
    net = synthgen.heterogeneous_network(40, 5.0, seed=5)
    part = DETECTORS[algo](net)
    n = net.n_nodes
    alive = set(range(n))
    for k, (x, y, new, _) in enumerate(part.dendrogram):
        assert new == n + k and x in alive and y in alive and x != y
        alive -= {x, y}
        alive.add(new)
    assert len(alive) == n - len(part.dendrogram)


def test_multilevel_levels_coarsen():
    net = synthgen.heterogeneous_network(300, 8.0, seed=0)
    part, levels = multilevel(net, return_levels=True)
    counts = [len(np.unique(lv)) for lv in levels]
    assert counts == sorted(counts, reverse=True)
    assert np.array_equal(levels[-1], part.membership)


def test_walktrap_length_validation():
    net, _, _ = two_cliques()
    with pytest.raises(CommunityError):
        walktrap(net, walk_length=0)


def test_concordance_examples():
    nodes = [f"n{i}" for i in range(8)]
    ref = Partition.from_labels({n: "abcd"[i // 2] for i, n in enumerate(nodes)}, nodes=nodes)
    assert concordance(ref, ref) == 1.0
    one = Partition.from_labels(dict.fromkeys(nodes, "x"), nodes=nodes)
    assert concordance(one, ref) == 0.25
    relabeled = Partition.from_labels({n: "dcba"[i // 2] + "!" for i, n in enumerate(nodes)}, nodes=nodes)
    assert concordance(relabeled, ref) == 1.0
    other = Partition.from_labels({n: "ab"[i % 2] + "cd"[i // 4] for i, n in enumerate(nodes)}, nodes=nodes)
    assert concordance(other, ref) == concordance(ref, other)
    with pytest.raises(CommunityError):
        concordance(ref, Partition.from_labels({"z": "a"}))


def test_partition_requires_full_assignment():
    with pytest.raises(CommunityError):
        Partition.from_labels({"a": "x"}, nodes=["a", "b"])


def test_partition_csv_round_trip(tmp_path):
    net, ref = synthgen.planted_partition_graph([5, 5], 1.0, 0.0, seed=0, n_between=1)
    part = walktrap(net)
    write_partition(tmp_path / "p.csv", part, ref)
    back = read_reference(tmp_path / "p.csv", net=net)
    assert concordance(back, ref) == 1.0
    assert back.modularity == pytest.approx(ref.modularity)


def test_two_blocks_of_five_generator():
    net, ref = synthgen.planted_partition_graph([5, 5], 1.0, 0.0, seed=9, n_between=1)
    assert net.n_edges == 21 and ref.n_communities == 2
    assert concordance(multilevel(net), ref) == 1.0


def test_fastgreedy_coarsens_bridged_cliques():
    net, ref = synthgen.bridged_cliques()
    fg = fastgreedy(net)
    assert concordance(walktrap(net), ref) == 1.0
    assert concordance(multilevel(net), ref) == 1.0
    assert fg.n_communities == ref.n_communities - 1
    assert concordance(fg, ref) == 0.75
    # the first greedy merge crosses the planted cut and is never undone
    x, y, _, gain = fg.dendrogram[0]
    assert {net.nodes[x], net.nodes[y]} == {"c0_0", "c1_0"}
    a = fg.assignment
    assert a["c0_0"] == a["c1_0"]
    # and it is the largest initial gain 2 (e_ij - a_i a_j)
    adj = dense(net)
    two_m = adj.sum()
    s = adj.sum(axis=1) / two_m
    gains = 2 * (adj / two_m - np.outer(s, s))
    gains[adj == 0] = -np.inf
    assert gain == pytest.approx(gains.max(), abs=1e-15)
    assert np.argwhere(gains == gains.max()).tolist() == [[x, y], [y, x]]
    assert fg.modularity < walktrap(net).modularity


def test_bridged_cliques_validation():
    with pytest.raises(synthgen.SynthError):
        synthgen.bridged_cliques(clique_size=2)
