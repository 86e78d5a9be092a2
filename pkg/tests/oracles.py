"""Independent brute-force oracles used to check the library's algorithms.

Everything here is deliberately naive (permutation enumeration, BFS walks,
power sets) and shares no code with the implementations under test.
"""

from __future__ import annotations

import itertools

import numpy as np

from gce.graphs import Graph, graph_from_edges


def oracle_injective_maps(pattern: Graph, host: Graph) -> list[tuple[int, ...]]:
    """All injective label/edge preserving maps, by raw permutation search."""
    np_, nh = pattern.node_count, host.node_count
    if np_ > nh:
        return []
    plab = pattern.node_labels().tolist()
    hlab = host.node_labels().tolist()
    result = []
    for combo in itertools.permutations(range(nh), np_):
        ok = True
        for p in range(np_):
            if plab[p] != hlab[combo[p]]:
                ok = False
                break
        if not ok:
            continue
        for i in range(np_):
            for j in range(i + 1, np_):
                if pattern.adjacency[i, j]:
                    if not host.adjacency[combo[i], combo[j]]:
                        ok = False
                        break
                    if pattern.edge_attr_dim > 0:
                        if pattern.edge_label(i, j) != host.edge_label(combo[i], combo[j]):
                            ok = False
                            break
            if not ok:
                break
        if ok:
            result.append(tuple(combo))
    return result


def oracle_contains(pattern: Graph, host: Graph) -> bool:
    return bool(oracle_injective_maps(pattern, host))


def oracle_image_sets(pattern: Graph, host: Graph) -> set[frozenset[int]]:
    return {frozenset(m) for m in oracle_injective_maps(pattern, host)}


def oracle_component_count(g: Graph) -> int:
    """BFS component recount over nodes that touch an edge; edgeless -> 1."""
    n = g.node_count
    active = [i for i in range(n) if g.degree(i) > 0]
    if not active:
        return 1
    seen: set[int] = set()
    comps = 0
    for start in active:
        if start in seen:
            continue
        comps += 1
        queue = [start]
        seen.add(start)
        while queue:
            u = queue.pop()
            for v in g.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
    return comps


def oracle_has_cycle(g: Graph) -> bool:
    """DFS cycle test on an undirected graph."""
    n = g.node_count
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        stack = [(start, -1)]
        seen[start] = True
        while stack:
            u, parent = stack.pop()
            for v in g.neighbors(u):
                if v == parent:
                    continue
                if seen[v]:
                    return True
                seen[v] = True
                stack.append((v, u))
    return False


def oracle_has_four_cycle(g: Graph, restrict_to: list[int] | None = None) -> bool:
    """Is there a simple cycle on exactly four distinct nodes?"""
    nodes = range(g.node_count) if restrict_to is None else restrict_to
    nodes = list(nodes)
    for a, b, c, d in itertools.permutations(nodes, 4):
        if a != min(a, b, c, d):
            continue
        if b > d:  # each cycle once
            continue
        if (
            g.adjacency[a, b]
            and g.adjacency[b, c]
            and g.adjacency[c, d]
            and g.adjacency[d, a]
        ):
            return True
    return False


def oracle_edge_set(g: Graph) -> set[tuple[int, int]]:
    return set(g.edges())


def random_labeled_graph(
    rng: np.random.Generator,
    n: int,
    num_labels: int,
    edge_prob: float,
    num_edge_labels: int = 0,
) -> Graph:
    labels = rng.integers(0, num_labels, size=n).tolist()
    edges = []
    elabels = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((i, j))
                if num_edge_labels > 0:
                    elabels.append(int(rng.integers(0, num_edge_labels)))
    return graph_from_edges(
        n, edges, labels, num_labels, elabels if num_edge_labels > 0 else None, num_edge_labels
    )


def oracle_frequent_patterns(
    graphs: list[Graph],
    tau: float,
    min_nodes: int,
    max_nodes: int,
    is_isomorphic_fn,
    contains_fn,
) -> list[tuple[Graph, float, tuple[int, ...]]]:
    """Enumerate-then-filter frequent pattern oracle.

    Candidate patterns are all connected spanning edge-subgraphs of node
    subsets of the input graphs, deduplicated up to isomorphism; support is
    recounted with the containment oracle passed in by the caller.
    """
    candidates: list[Graph] = []
    for g in graphs:
        n = g.node_count
        for size in range(min_nodes, min(max_nodes, n) + 1):
            for subset in itertools.combinations(range(n), size):
                idx = {v: k for k, v in enumerate(subset)}
                avail = [
                    (a, b)
                    for a, b in g.edges()
                    if a in idx and b in idx
                ]
                if len(avail) < size - 1:
                    continue
                for r in range(size - 1, len(avail) + 1):
                    for chosen in itertools.combinations(avail, r):
                        labels = [int(g.node_labels()[v]) for v in subset]
                        edges = [(idx[a], idx[b]) for a, b in chosen]
                        elabels = (
                            [g.edge_label(a, b) for a, b in chosen]
                            if g.edge_attr_dim > 0
                            else None
                        )
                        cand = graph_from_edges(
                            size,
                            edges,
                            labels,
                            g.node_attr_dim,
                            elabels,
                            g.edge_attr_dim,
                        )
                        deg = cand.adjacency.sum(axis=1)
                        if np.any(deg == 0):
                            continue
                        if oracle_component_count(cand) != 1:
                            continue
                        if not any(is_isomorphic_fn(cand, c) for c in candidates):
                            candidates.append(cand)
    out = []
    for cand in candidates:
        support = tuple(i for i, g in enumerate(graphs) if contains_fn(cand, g))
        rate = len(support) / len(graphs)
        if rate >= tau - 1e-9:
            out.append((cand, rate, support))
    return out
