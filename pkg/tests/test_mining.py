import numpy as np
import pytest

from gce.graphs import GraphDataset, graph_from_edges
from gce.matching import contains, is_isomorphic
from gce.mining import (
    FrequentPattern,
    MinerConfig,
    graph_from_dfs_code,
    load_patterns,
    mine_frequent,
    minimum_dfs_code,
    save_patterns,
    select_significant,
)
from oracles import oracle_frequent_patterns, random_labeled_graph


def make_dataset(graphs, name="corpus"):
    l = graphs[0].node_attr_dim
    m = graphs[0].edge_attr_dim
    return GraphDataset(
        tuple(graphs),
        tuple(0 for _ in graphs),
        tuple(str(i) for i in range(l)),
        tuple(str(i) for i in range(m)),
        name,
    )


def patterns_equal_up_to_iso(mined, expected_graphs):
    if len(mined) != len(expected_graphs):
        return False
    used = [False] * len(expected_graphs)
    for p in mined:
        hit = None
        for i, g in enumerate(expected_graphs):
            if not used[i] and is_isomorphic(p.graph, g):
                hit = i
                break
        if hit is None:
            return False
        used[hit] = True
    return True


def test_three_triangles_tau_one():
    tri = graph_from_edges(3, [(0, 1), (1, 2), (0, 2)], [0, 0, 0], 1)
    ds = make_dataset([tri, tri, tri])
    pats = mine_frequent(ds, MinerConfig(tau=1.0, min_nodes=3, max_nodes=3))
    # the triangle itself plus its frequent 3-node sub-pattern (the path)
    assert len(pats) == 2
    assert all(p.appearance_rate == 1.0 for p in pats)
    assert all(p.support_ids == (0, 1, 2) for p in pats)
    kinds = {int(p.graph.adjacency.sum()) // 2 for p in pats}
    assert kinds == {2, 3}


def test_no_common_pattern_gives_empty():
    a = graph_from_edges(3, [(0, 1), (1, 2)], [0, 0, 0], 2)
    b = graph_from_edges(3, [(0, 1), (1, 2)], [1, 1, 1], 2)
    ds = make_dataset([a, b])
    assert mine_frequent(ds, MinerConfig(tau=1.0, min_nodes=3, max_nodes=3)) == []


def test_tau_validation():
    with pytest.raises(ValueError):
        MinerConfig(tau=0.0)
    with pytest.raises(ValueError):
        MinerConfig(tau=1.5)
    with pytest.raises(ValueError):
        MinerConfig(tau=0.5, min_nodes=2)


def test_canonicality_of_emitted_codes():
    rng = np.random.default_rng(23)
    graphs = [random_labeled_graph(rng, int(rng.integers(4, 8)), 2, 0.45) for _ in range(12)]
    ds = make_dataset(graphs)
    pats = mine_frequent(ds, MinerConfig(tau=0.25, min_nodes=3, max_nodes=4))
    assert pats
    for p in pats:
        assert minimum_dfs_code(p.graph) == p.dfs_code
        assert graph_from_dfs_code(p.dfs_code, 2, 0).node_count == p.graph.node_count


def test_sorted_by_rate_then_code():
    rng = np.random.default_rng(5)
    graphs = [random_labeled_graph(rng, 6, 2, 0.5) for _ in range(10)]
    ds = make_dataset(graphs)
    pats = mine_frequent(ds, MinerConfig(tau=0.2, min_nodes=3, max_nodes=4))
    rates = [p.appearance_rate for p in pats]
    assert rates == sorted(rates, reverse=True)
    for a, b in zip(pats, pats[1:]):
        if a.appearance_rate == b.appearance_rate:
            assert (len(a.dfs_code), a.dfs_code) <= (len(b.dfs_code), b.dfs_code)


def _oracle_set(graphs, tau, min_nodes, max_nodes):
    return oracle_frequent_patterns(
        graphs, tau, min_nodes, max_nodes, is_isomorphic, contains
    )


def test_miner_matches_bruteforce_small_corpora():
    rng = np.random.default_rng(77)
    for trial in range(20):
        count = int(rng.integers(4, 12))
        labels = int(rng.integers(1, 3))
        graphs = [
            random_labeled_graph(rng, int(rng.integers(3, 8)), labels, 0.4)
            for _ in range(count)
        ]
        tau = float(rng.choice([0.3, 0.5, 0.75]))
        ds = make_dataset(graphs)
        mined = mine_frequent(ds, MinerConfig(tau=tau, min_nodes=3, max_nodes=4))
        expected = _oracle_set(graphs, tau, 3, 4)
        assert patterns_equal_up_to_iso(mined, [g for g, _, _ in expected]), (
            f"trial {trial}: mined {len(mined)} vs expected {len(expected)}"
        )
        # appearance rates and supports must agree pattern-by-pattern
        for g, rate, support in expected:
            match = [p for p in mined if is_isomorphic(p.graph, g)]
            assert len(match) == 1
            assert match[0].appearance_rate == pytest.approx(rate)
            assert match[0].support_ids == support


def test_miner_with_edge_labels_matches_oracle():
    rng = np.random.default_rng(123)
    for _ in range(6):
        graphs = [
            random_labeled_graph(rng, int(rng.integers(3, 7)), 2, 0.5, 2)
            for _ in range(8)
        ]
        ds = make_dataset(graphs)
        mined = mine_frequent(ds, MinerConfig(tau=0.25, min_nodes=3, max_nodes=4))
        expected = _oracle_set(graphs, 0.25, 3, 4)
        assert patterns_equal_up_to_iso(mined, [g for g, _, _ in expected])


def test_anti_monotone_submatterns():
    rng = np.random.default_rng(31)
    graphs = [random_labeled_graph(rng, 7, 2, 0.4) for _ in range(15)]
    ds = make_dataset(graphs)
    tau = 0.3
    mined = mine_frequent(ds, MinerConfig(tau=tau, min_nodes=3, max_nodes=5))
    mined_small = mine_frequent(ds, MinerConfig(tau=tau, min_nodes=3, max_nodes=3))
    small = {p.dfs_code for p in mined_small}
    # every 3-node connected sub-pattern of an emitted pattern is frequent
    for p in mined:
        g = p.graph
        n = g.node_count
        import itertools

        for subset in itertools.combinations(range(n), 3):
            idx = {v: k for k, v in enumerate(subset)}
            edges = [(idx[a], idx[b]) for a, b in g.edges() if a in idx and b in idx]
            if len(edges) < 2:
                continue
            labels = [int(g.node_labels()[v]) for v in subset]
            sub = graph_from_edges(3, edges, labels, g.node_attr_dim)
            if sub.adjacency.sum(axis=1).min() == 0:
                continue
            assert minimum_dfs_code(sub) in small


def test_select_top_ar_and_full():
    rng = np.random.default_rng(2)
    graphs = [random_labeled_graph(rng, 6, 1, 0.5) for _ in range(10)]
    ds = make_dataset(graphs)
    pats = mine_frequent(ds, MinerConfig(tau=0.2, min_nodes=3, max_nodes=4))
    assert len(pats) >= 3
    top = select_significant(pats, 3, "top_ar")
    assert top == pats[:3]
    assert select_significant(pats, len(pats) + 5, "top_ar") == pats
    with pytest.raises(ValueError):
        select_significant(pats, 0, "top_ar")


def test_select_greedy_cover_zero_marginal_last():
    g = graph_from_edges(3, [(0, 1), (1, 2)], [0, 0, 0], 1)
    p1 = FrequentPattern(g, 0.5, (0, 1, 2), minimum_dfs_code(g))
    p2 = FrequentPattern(g, 0.5, (0, 1, 2), minimum_dfs_code(g))
    chosen = select_significant([p1, p2], 2, "greedy_cover")
    assert chosen == [p1, p2]  # identical support: second adds nothing, picked last


def test_select_greedy_cover_matches_replay_oracle():
    rng = np.random.default_rng(8)
    for _ in range(10):
        g = graph_from_edges(3, [(0, 1), (1, 2)], [0, 0, 0], 1)
        pool = []
        for i in range(15):
            support = tuple(sorted(rng.choice(30, size=int(rng.integers(1, 12)), replace=False).tolist()))
            pool.append(FrequentPattern(g, len(support) / 30, support, minimum_dfs_code(g)))
        chosen = select_significant(pool, 4, "greedy_cover")
        # independent greedy replay over support bitsets
        covered: set[int] = set()
        remaining = list(range(15))
        expect = []
        for _round in range(4):
            gains = [(len(set(pool[i].support_ids) - covered), -remaining.index(i), i) for i in remaining]
            best = max(gains, key=lambda t: (t[0], t[1]))[2]
            expect.append(pool[best])
            covered |= set(pool[best].support_ids)
            remaining.remove(best)
        assert chosen == expect


def test_pattern_dump_round_trip(tmp_path):
    rng = np.random.default_rng(99)
    graphs = [random_labeled_graph(rng, 6, 2, 0.5, 2) for _ in range(8)]
    ds = make_dataset(graphs)
    pats = mine_frequent(ds, MinerConfig(tau=0.25, min_nodes=3, max_nodes=4))
    path = tmp_path / "patterns.jsonl"
    save_patterns(pats, str(path), ds)
    back, header = load_patterns(str(path))
    assert header["dataset"] == "corpus"
    assert len(back) == len(pats)
    for a, b in zip(pats, back):
        assert a.dfs_code == b.dfs_code
        assert a.support_ids == b.support_ids
        assert a.appearance_rate == b.appearance_rate
        assert is_isomorphic(a.graph, b.graph)


def test_pattern_dump_rejects_bad_format(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"format": "something-else"}\n')
    with pytest.raises(ValueError, match="format"):
        load_patterns(str(path))
