"""Subgraph matching and frequent pattern mining on a toy corpus."""

import numpy as np

from gce import (
    GraphDataset,
    MinerConfig,
    contains,
    find_occurrences,
    graph_from_edges,
    is_isomorphic,
    mine_frequent,
    select_significant,
)

triangle = graph_from_edges(3, [(0, 1), (1, 2), (0, 2)], [0, 0, 0], 1)
path3 = graph_from_edges(3, [(0, 1), (1, 2)], [0, 0, 0], 1)

# Matching is an edge monomorphism: the host may carry extra edges.
print("path-3 inside a triangle:", contains(path3, triangle))
print("triangle inside a path-3:", contains(triangle, path3))
print("isomorphic:", is_isomorphic(triangle, path3))

host = graph_from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (2, 5)], [0] * 6, 1)
occs = find_occurrences(path3, host, max_count=10)
print(f"path-3 occurs in the 6-node tree at {len(occs)} node sets:")
for occ in occs:
    print("   ", sorted(occ.mapping))

# Mine every connected pattern appearing in at least 60% of a small corpus.
rng = np.random.default_rng(0)
graphs = []
for _ in range(10):
    n = int(rng.integers(4, 8))
    edges = [(int(rng.integers(0, j)), j) for j in range(1, n)]
    graphs.append(graph_from_edges(n, edges, [0] * n, 1))
corpus = GraphDataset(tuple(graphs), (0,) * 10, ("0",), (), "toy")

patterns = mine_frequent(corpus, MinerConfig(tau=0.6, min_nodes=3, max_nodes=4))
print(f"\nfrequent patterns (tau=0.6): {len(patterns)}")
for p in patterns:
    print(
        f"  {p.graph.node_count} nodes, {len(p.graph.edges())} edges, "
        f"appearance rate {p.appearance_rate:.2f}, code {p.dfs_code}"
    )

top = select_significant(patterns, 3, "greedy_cover")
print(f"greedy-cover selection keeps {len(top)} patterns")
