"""Graph data model, TU flat-file ingestion, synthetic data, and graph primitives.

Graphs are small labeled undirected graphs stored densely: a symmetric 0/1
adjacency matrix, a one-hot node attribute matrix, and (optionally) a one-hot
attribute vector per edge.  Everything downstream (matching, mining, the
classifier, the autoencoder) builds on this module.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "GraphDataset",
    "WeightedDistanceConfig",
    "graph_from_edges",
    "graphs_equal",
    "datasets_equal",
    "parse_tu_dataset",
    "write_tu_dataset",
    "generate_synthetic",
    "graph_distance",
    "symmetric_difference",
    "connected_components",
]


@dataclass(frozen=True)
class Graph:
    """Labeled attributed undirected graph.

    adjacency: (n, n) symmetric 0/1 int matrix with zero diagonal.
    node_attrs: (n, l) one-hot rows (l = node label vocabulary size, l >= 1).
    edge_attrs: {(i, j): one-hot vector of length m} with i < j, one entry per
        edge; empty dict when the dataset has no edge labels (m = 0).
    """

    adjacency: np.ndarray
    node_attrs: np.ndarray
    edge_attrs: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    edge_attr_dim: int = 0

    def __post_init__(self) -> None:
        a = np.ascontiguousarray(self.adjacency, dtype=np.int8)
        x = np.ascontiguousarray(self.node_attrs, dtype=np.int8)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        n = a.shape[0]
        if x.shape[0] != n or x.ndim != 2 or x.shape[1] < 1:
            raise ValueError("node_attrs must be (n, l) with l >= 1")
        if np.any(a != a.T) or np.any(np.diag(a) != 0):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        if np.any((a != 0) & (a != 1)):
            raise ValueError("adjacency entries must be 0/1")
        if np.any(x.sum(axis=1) != 1) or np.any((x != 0) & (x != 1)):
            raise ValueError("node_attrs rows must be one-hot")
        attrs = {}
        for (i, j), vec in self.edge_attrs.items():
            key = (i, j) if i < j else (j, i)
            v = np.ascontiguousarray(vec, dtype=np.int8)
            if key in attrs and np.any(attrs[key] != v):
                raise ValueError(f"conflicting attribute vectors for edge {key}")
            attrs[key] = v
        m = self.edge_attr_dim
        if attrs and m == 0:
            m = len(next(iter(attrs.values())))
        if m > 0:
            edges = {(i, j) for i in range(n) for j in range(i + 1, n) if a[i, j]}
            if set(attrs) != edges:
                raise ValueError("edge_attrs keys must match the edge set exactly")
            for v in attrs.values():
                if v.shape != (m,) or v.sum() != 1 or np.any((v != 0) & (v != 1)):
                    raise ValueError("edge_attrs values must be one-hot of length m")
        elif attrs:
            raise ValueError("edge_attrs present but edge_attr_dim is 0")
        a.flags.writeable = False
        x.flags.writeable = False
        for v in attrs.values():
            v.flags.writeable = False
        object.__setattr__(self, "adjacency", a)
        object.__setattr__(self, "node_attrs", x)
        object.__setattr__(self, "edge_attrs", attrs)
        object.__setattr__(self, "edge_attr_dim", m)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    @property
    def node_attr_dim(self) -> int:
        return self.node_attrs.shape[1]

    def node_labels(self) -> np.ndarray:
        """Integer label per node (argmax of the one-hot row)."""
        return np.argmax(self.node_attrs, axis=1)

    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of undirected edges (i, j) with i < j."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def edge_label(self, i: int, j: int) -> int:
        """Integer label of edge (i, j); 0 when the graph has no edge labels."""
        if self.edge_attr_dim == 0:
            return 0
        key = (i, j) if i < j else (j, i)
        return int(np.argmax(self.edge_attrs[key]))

    def neighbors(self, i: int) -> list[int]:
        return np.nonzero(self.adjacency[i])[0].tolist()

    def degree(self, i: int) -> int:
        return int(self.adjacency[i].sum())

    def to_dict(self) -> dict:
        """Plain-data form (used by the dump file formats)."""
        elabels = [[i, j, self.edge_label(i, j)] for i, j in self.edges()]
        return {
            "n": self.node_count,
            "l": self.node_attr_dim,
            "m": self.edge_attr_dim,
            "node_labels": self.node_labels().tolist(),
            "edges": elabels,
        }

    @staticmethod
    def from_dict(d: dict) -> "Graph":
        edges = [(int(i), int(j)) for i, j, _ in d["edges"]]
        elabels = [int(e) for _, _, e in d["edges"]] if d["m"] > 0 else None
        return graph_from_edges(d["n"], edges, d["node_labels"], d["l"], elabels, d["m"])


def graph_from_edges(
    n: int,
    edges: list[tuple[int, int]],
    node_labels: list[int],
    num_node_labels: int,
    edge_labels: list[int] | None = None,
    num_edge_labels: int = 0,
) -> Graph:
    """Build a Graph from an edge list and integer labels."""
    a = np.zeros((n, n), dtype=np.int8)
    for i, j in edges:
        a[i, j] = a[j, i] = 1
    x = np.zeros((n, num_node_labels), dtype=np.int8)
    x[np.arange(n), np.asarray(node_labels, dtype=int)] = 1
    attrs: dict[tuple[int, int], np.ndarray] = {}
    if num_edge_labels > 0:
        if edge_labels is None or len(edge_labels) != len(edges):
            raise ValueError("edge_labels must align with edges when m > 0")
        for (i, j), lab in zip(edges, edge_labels):
            v = np.zeros(num_edge_labels, dtype=np.int8)
            v[lab] = 1
            attrs[(i, j) if i < j else (j, i)] = v
    return Graph(a, x, attrs, num_edge_labels)


def graphs_equal(a: Graph, b: Graph) -> bool:
    """Structural (representation-level) equality, not isomorphism."""
    if a.node_count != b.node_count or a.node_attr_dim != b.node_attr_dim:
        return False
    if a.edge_attr_dim != b.edge_attr_dim:
        return False
    if np.any(a.adjacency != b.adjacency) or np.any(a.node_attrs != b.node_attrs):
        return False
    if a.edge_attr_dim > 0:
        for key, v in a.edge_attrs.items():
            if np.any(v != b.edge_attrs[key]):
                return False
    return True


@dataclass(frozen=True)
class GraphDataset:
    """An ordered collection of graphs with binary class labels.

    Label convention: 0 is the undesired class, 1 the desired class.  All
    graphs share node/edge label vocabularies.
    """

    graphs: tuple[Graph, ...]
    labels: tuple[int, ...]
    node_vocab: tuple[str, ...]
    edge_vocab: tuple[str, ...]
    name: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "labels", tuple(int(y) for y in self.labels))
        object.__setattr__(self, "node_vocab", tuple(self.node_vocab))
        object.__setattr__(self, "edge_vocab", tuple(self.edge_vocab))
        if len(self.graphs) != len(self.labels):
            raise ValueError("graphs and labels must have equal length")
        if any(y not in (0, 1) for y in self.labels):
            raise ValueError("labels must be 0/1")
        l, m = len(self.node_vocab), len(self.edge_vocab)
        for g in self.graphs:
            if g.node_attr_dim != l or g.edge_attr_dim != m:
                raise ValueError("all graphs must share the dataset vocabularies")

    def __len__(self) -> int:
        return len(self.graphs)

    @property
    def node_attr_dim(self) -> int:
        return len(self.node_vocab)

    @property
    def edge_attr_dim(self) -> int:
        return len(self.edge_vocab)

    def subset(self, indices: list[int], name: str | None = None) -> "GraphDataset":
        return GraphDataset(
            tuple(self.graphs[i] for i in indices),
            tuple(self.labels[i] for i in indices),
            self.node_vocab,
            self.edge_vocab,
            name if name is not None else self.name,
        )


def datasets_equal(a: GraphDataset, b: GraphDataset) -> bool:
    """Structural equality: same labels and graphs in the same order."""
    if len(a) != len(b) or a.labels != b.labels:
        return False
    if a.node_attr_dim != b.node_attr_dim or a.edge_attr_dim != b.edge_attr_dim:
        return False
    return all(graphs_equal(x, y) for x, y in zip(a.graphs, b.graphs))


@dataclass(frozen=True)
class WeightedDistanceConfig:
    """Weights of the adjacency / node-attr / edge-attr distance terms."""

    rho: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.rho < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("distance weights must be nonnegative")
        if self.rho == 0 and self.beta == 0 and self.gamma == 0:
            raise ValueError("at least one distance weight must be positive")


# ---------------------------------------------------------------------------
# TU flat-file format
# ---------------------------------------------------------------------------

def _read_int_lines(path: str) -> list[int]:
    with open(path, "r", encoding="utf-8") as fh:
        return [int(line.strip()) for line in fh if line.strip()]


def _read_pair_lines(path: str) -> list[tuple[int, int]]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i, j = line.split(",")
            pairs.append((int(i), int(j)))
    return pairs


def _read_label_map(path: str) -> dict[int, int]:
    mapping: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            raw, mapped = line.split()
            if int(mapped) not in (0, 1):
                raise ValueError(f"label map target must be 0 or 1, got {mapped!r}")
            mapping[int(raw)] = int(mapped)
    return mapping


def parse_tu_dataset(
    directory_path: str, dataset_name: str, label_map_path: str | None = None
) -> GraphDataset:
    """Parse a dataset in the TU flat-file format.

    Mandatory files: `<name>_A.txt` ("i, j" lines, 1-based global node ids,
    both directions present), `<name>_graph_indicator.txt`, and
    `<name>_graph_labels.txt`.  Optional: `<name>_node_labels.txt` and
    `<name>_edge_labels.txt` (edge lines aligned with `_A.txt`).

    Graph labels are remapped to {0, 1} (0 = undesired).  If the raw label
    set is not already {0, 1}, an explicit label map file is required.
    """

    def fpath(suffix: str) -> str:
        return os.path.join(directory_path, f"{dataset_name}_{suffix}.txt")

    for suffix in ("A", "graph_indicator", "graph_labels"):
        if not os.path.isfile(fpath(suffix)):
            raise FileNotFoundError(f"missing mandatory TU file: {fpath(suffix)}")

    indicator = _read_int_lines(fpath("graph_indicator"))
    raw_graph_labels = _read_int_lines(fpath("graph_labels"))
    pairs = _read_pair_lines(fpath("A"))

    node_label_path = fpath("node_labels")
    raw_node_labels = (
        _read_int_lines(node_label_path) if os.path.isfile(node_label_path) else [0] * len(indicator)
    )
    if len(raw_node_labels) != len(indicator):
        raise ValueError("node label count does not match node count")

    edge_label_path = fpath("edge_labels")
    raw_edge_labels: list[int] | None = None
    if os.path.isfile(edge_label_path):
        raw_edge_labels = _read_int_lines(edge_label_path)
        if len(raw_edge_labels) != len(pairs):
            raise ValueError("edge label count does not match edge line count")

    num_graphs = len(raw_graph_labels)
    if indicator and (min(indicator) < 1 or max(indicator) > num_graphs):
        raise ValueError("graph_indicator references an unknown graph id")

    node_vocab_ints = sorted(set(raw_node_labels)) if indicator else [0]
    node_index = {v: k for k, v in enumerate(node_vocab_ints)}
    edge_vocab_ints: list[int] = sorted(set(raw_edge_labels)) if raw_edge_labels else []
    edge_index = {v: k for k, v in enumerate(edge_vocab_ints)}
    m = len(edge_vocab_ints)

    # Partition global node ids per graph (TU ids are 1-based and contiguous).
    nodes_of: list[list[int]] = [[] for _ in range(num_graphs)]
    for global_id, gid in enumerate(indicator, start=1):
        nodes_of[gid - 1].append(global_id)
    offset = {}
    for gid, nodes in enumerate(nodes_of):
        for local, global_id in enumerate(nodes):
            offset[global_id] = (gid, local)

    edges_of: list[dict[tuple[int, int], int | None]] = [dict() for _ in range(num_graphs)]
    for line_no, (u, v) in enumerate(pairs):
        if u not in offset or v not in offset:
            raise ValueError(f"edge line {line_no + 1} references an unknown node id")
        gu, lu = offset[u]
        gv, lv = offset[v]
        if gu != gv:
            raise ValueError(
                f"edge line {line_no + 1} connects nodes of different graphs ({u}, {v})"
            )
        key = (min(lu, lv), max(lu, lv))
        lab = edge_index[raw_edge_labels[line_no]] if raw_edge_labels else None
        prev = edges_of[gu].get(key, lab)
        if prev != lab:
            raise ValueError(f"conflicting labels for edge {key} in graph {gu + 1}")
        edges_of[gu][key] = lab

    label_set = set(raw_graph_labels)
    if label_map_path is not None:
        label_map = _read_label_map(label_map_path)
        missing = label_set - set(label_map)
        if missing:
            raise ValueError(f"label map does not cover raw labels {sorted(missing)}")
    elif label_set <= {0, 1}:
        label_map = {0: 0, 1: 1}
    else:
        raise ValueError(
            f"raw graph labels {sorted(label_set)} are not 0/1; supply a label map file"
        )

    graphs = []
    for gid in range(num_graphs):
        n = len(nodes_of[gid])
        edge_items = sorted(edges_of[gid].items())
        edge_list = [k for k, _ in edge_items]
        elabels = [lab for _, lab in edge_items] if m > 0 else None
        labels = [node_index[raw_node_labels[g - 1]] for g in nodes_of[gid]]
        graphs.append(
            graph_from_edges(n, edge_list, labels, len(node_vocab_ints), elabels, m)
        )

    return GraphDataset(
        tuple(graphs),
        tuple(label_map[y] for y in raw_graph_labels),
        tuple(str(v) for v in node_vocab_ints),
        tuple(str(v) for v in edge_vocab_ints),
        dataset_name,
    )


def write_tu_dataset(dataset: GraphDataset, directory_path: str) -> None:
    """Write a dataset in the TU flat-file format (re-parses to an equal dataset)."""
    os.makedirs(directory_path, exist_ok=True)

    def fpath(suffix: str) -> str:
        return os.path.join(directory_path, f"{dataset.name}_{suffix}.txt")

    a_lines: list[str] = []
    indicator_lines: list[str] = []
    node_label_lines: list[str] = []
    edge_label_lines: list[str] = []
    base = 0
    for gid, g in enumerate(dataset.graphs, start=1):
        labels = g.node_labels()
        for i in range(g.node_count):
            indicator_lines.append(str(gid))
            node_label_lines.append(str(labels[i]))
        for i, j in g.edges():
            # Both directions, label line aligned with each direction.
            a_lines.append(f"{base + i + 1}, {base + j + 1}")
            a_lines.append(f"{base + j + 1}, {base + i + 1}")
            if dataset.edge_attr_dim > 0:
                lab = str(g.edge_label(i, j))
                edge_label_lines.extend([lab, lab])
        base += g.node_count

    def dump(suffix: str, lines: list[str]) -> None:
        with open(fpath(suffix), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))

    dump("A", a_lines)
    dump("graph_indicator", indicator_lines)
    dump("graph_labels", [str(y) for y in dataset.labels])
    dump("node_labels", node_label_lines)
    if dataset.edge_attr_dim > 0:
        dump("edge_labels", edge_label_lines)


# ---------------------------------------------------------------------------
# Synthetic dataset: acyclic (undesired) vs contains-a-rectangle (desired)
# ---------------------------------------------------------------------------

def _random_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform random labeled tree on n nodes via a Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    edges = []
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(u, w), max(u, w)))
    return edges


def _four_node_paths(n: int, edges: list[tuple[int, int]]) -> list[tuple[int, int, int, int]]:
    """All simple 4-node paths u-a-b-w, each counted once, in sorted order."""
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    for lst in nbrs:
        lst.sort()
    paths = set()
    for a, b in edges:
        for u in nbrs[a]:
            if u == b:
                continue
            for w in nbrs[b]:
                if w == a or w == u:
                    continue
                p = (u, a, b, w)
                q = (w, b, a, u)
                paths.add(min(p, q))
    return sorted(paths)


def generate_synthetic(count: int, seed: int) -> GraphDataset:
    """Binary synthetic dataset: half acyclic trees (label 0), half graphs
    holding at least one 4-cycle (label 1).

    Node counts are uniform in [4, 15].  Desired graphs are a random tree
    plus one edge closing a 4-node path into a 4-cycle.  Single node label,
    no edge labels.  Deterministic given the seed.
    """
    if count < 2 or count % 2 != 0:
        raise ValueError("count must be even and >= 2")
    rng = np.random.default_rng(seed)
    graphs = []
    labels = []
    for idx in range(count):
        desired = idx % 2 == 1
        n = int(rng.integers(4, 16))
        edges = _random_tree_edges(n, rng)
        if desired:
            paths = _four_node_paths(n, edges)
            while not paths:  # stars have no 4-node path; redraw
                edges = _random_tree_edges(n, rng)
                paths = _four_node_paths(n, edges)
            u, _, _, w = paths[int(rng.integers(len(paths)))]
            edges.append((min(u, w), max(u, w)))
        graphs.append(graph_from_edges(n, edges, [0] * n, 1))
        labels.append(1 if desired else 0)
    return GraphDataset(tuple(graphs), tuple(labels), ("0",), (), "synthetic")


# ---------------------------------------------------------------------------
# Graph primitives
# ---------------------------------------------------------------------------

def _padded(a: Graph, b: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = max(a.node_count, b.node_count)
    pa = np.zeros((n, n))
    pb = np.zeros((n, n))
    pa[: a.node_count, : a.node_count] = a.adjacency
    pb[: b.node_count, : b.node_count] = b.adjacency
    xa = np.zeros((n, a.node_attr_dim))
    xb = np.zeros((n, b.node_attr_dim))
    xa[: a.node_count] = a.node_attrs
    xb[: b.node_count] = b.node_attrs
    return pa, pb, xa, xb


def graph_distance(a: Graph, b: Graph, w: WeightedDistanceConfig) -> float:
    """Weighted distance rho*d_A + beta*d_X + gamma*d_E.

    d_A counts (as a Frobenius norm over the strict upper triangle) the edges
    of `a` that are absent from `b` -- the distance is deliberately NOT
    symmetric.  Graphs of unequal size are zero-padded to the larger one.
    """
    if a.node_attr_dim != b.node_attr_dim or a.edge_attr_dim != b.edge_attr_dim:
        raise ValueError("attribute dimensions of the two graphs do not match")
    pa, pb, xa, xb = _padded(a, b)
    missing = np.triu(pa * (1.0 - pb), k=1)
    d_a = float(np.linalg.norm(missing))
    d_x = float(np.linalg.norm(xa - xb))
    d_e = 0.0
    if a.edge_attr_dim > 0:
        m = a.edge_attr_dim
        zero = np.zeros(m)
        total = 0.0
        for key in sorted(set(a.edge_attrs) | set(b.edge_attrs)):
            va = a.edge_attrs.get(key, zero)
            vb = b.edge_attrs.get(key, zero)
            diff = va.astype(float) - vb.astype(float)
            total += float(diff @ diff)
        d_e = float(np.sqrt(total))
    return w.rho * d_a + w.beta * d_x + w.gamma * d_e


def symmetric_difference(a: Graph, b: Graph) -> Graph:
    """Structural symmetric difference graph: edges in exactly one of a, b.

    Node and edge attributes are dropped (every node gets the single dummy
    label); the node set is the padded union index space.
    """
    pa, pb, _, _ = _padded(a, b)
    xor = ((pa + pb) == 1).astype(np.int8)
    n = xor.shape[0]
    x = np.ones((n, 1), dtype=np.int8)
    return Graph(xor, x)


def connected_components(g: Graph) -> int:
    """Number of connected components among nodes with at least one edge.

    An entirely edgeless graph counts as one component (keeps the
    comprehensibility metric finite).
    """
    deg = g.adjacency.sum(axis=1)
    active = np.nonzero(deg > 0)[0]
    if len(active) == 0:
        return 1
    parent = {int(i): int(i) for i in active}

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in g.edges():
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    return len({find(int(i)) for i in active})
