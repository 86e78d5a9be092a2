"""Frequent subgraph mining with canonical DFS codes, and pattern selection.

The miner grows patterns edge by edge along rightmost-path extensions and
prunes non-canonical branches by recomputing the minimum DFS code.  Support
is counted per graph, so a pattern's appearance rate is the fraction of input
graphs containing it at least once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from gce.graphs import Graph, GraphDataset, graph_from_edges

__all__ = [
    "FrequentPattern",
    "MinerConfig",
    "mine_frequent",
    "select_significant",
    "minimum_dfs_code",
    "graph_from_dfs_code",
    "save_patterns",
    "load_patterns",
]

PATTERN_FORMAT = "gce-patterns-v1"

DfsCode = tuple[tuple[int, int, int, int, int], ...]  # (i, j, label_i, edge_label, label_j)


@dataclass(frozen=True)
class MinerConfig:
    """Mining thresholds and the candidate budget."""

    tau: float
    min_nodes: int = 3
    max_nodes: int = 20
    k_candidates: int = 10
    selection_mode: str = "top_ar"

    def __post_init__(self) -> None:
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("tau must be in (0, 1]")
        if not (3 <= self.min_nodes <= self.max_nodes):
            raise ValueError("need 3 <= min_nodes <= max_nodes")
        if self.k_candidates < 1:
            raise ValueError("k_candidates must be >= 1")
        if self.selection_mode not in ("top_ar", "greedy_cover"):
            raise ValueError("selection_mode must be top_ar or greedy_cover")


@dataclass(frozen=True)
class FrequentPattern:
    """A mined pattern with its canonical code and per-graph support."""

    graph: Graph
    appearance_rate: float
    support_ids: tuple[int, ...]
    dfs_code: DfsCode


# ---------------------------------------------------------------------------
# Lightweight mining representation
# ---------------------------------------------------------------------------


class _MGraph:
    """Adjacency-list view of a Graph with integer labels and edge ids."""

    __slots__ = ("vlab", "adj", "nedges")

    def __init__(self, g: Graph):
        self.vlab = g.node_labels().tolist()
        self.adj: list[list[tuple[int, int, int]]] = [[] for _ in range(g.node_count)]
        edges = g.edges()
        self.nedges = len(edges)
        for eid, (i, j) in enumerate(edges):
            el = g.edge_label(i, j)
            self.adj[i].append((j, el, eid))
            self.adj[j].append((i, el, eid))
        for lst in self.adj:
            lst.sort()


class _PDFS:
    """One directed host edge in a projection chain."""

    __slots__ = ("gid", "frm", "to", "elabel", "eid", "prev")

    def __init__(self, gid, frm, to, elabel, eid, prev):
        self.gid = gid
        self.frm = frm
        self.to = to
        self.elabel = elabel
        self.eid = eid
        self.prev = prev


class _History:
    """Edges of a projection chain in code order, plus membership sets."""

    __slots__ = ("edges", "vertices", "eids")

    def __init__(self, p: _PDFS):
        chain = []
        while p is not None:
            chain.append(p)
            p = p.prev
        chain.reverse()
        self.edges = chain
        self.vertices = set()
        self.eids = set()
        for e in chain:
            self.vertices.add(e.frm)
            self.vertices.add(e.to)
            self.eids.add(e.eid)


def _rightmost_path(code: list[tuple[int, int, int, int, int]]) -> list[int]:
    """Indices of the forward edges on the rightmost path, last edge first."""
    rm: list[int] = []
    old_frm = None
    for i in range(len(code) - 1, -1, -1):
        frm, to = code[i][0], code[i][1]
        if frm < to and (old_frm is None or to == old_frm):
            rm.append(i)
            old_frm = frm
    return rm


def _code_labels(code: list[tuple[int, int, int, int, int]]) -> dict[int, int]:
    labels = {code[0][0]: code[0][2], code[0][1]: code[0][4]}
    for frm, to, la, _, lb in code[1:]:
        if frm < to:
            labels[to] = lb
    return labels


def _code_node_count(code: list[tuple[int, int, int, int, int]]) -> int:
    return max(max(frm, to) for frm, to, *_ in code) + 1


def graph_from_dfs_code(code: DfsCode, num_node_labels: int, num_edge_labels: int) -> Graph:
    """Reconstruct the pattern graph encoded by a DFS code."""
    labels = _code_labels(list(code))
    n = _code_node_count(list(code))
    edges = [(min(frm, to), max(frm, to)) for frm, to, *_ in code]
    elabels = [el for _, _, _, el, _ in code] if num_edge_labels > 0 else None
    return graph_from_edges(
        n, edges, [labels[i] for i in range(n)], num_node_labels, elabels, num_edge_labels
    )


# ---------------------------------------------------------------------------
# Minimum DFS code of a single small graph
# ---------------------------------------------------------------------------


def minimum_dfs_code(g: Graph) -> DfsCode:
    """Canonical (minimum) DFS code of a connected pattern graph.

    Built greedily: at each step take the smallest legal rightmost-path
    extension over all embeddings realizing the current minimal prefix.
    """
    mg = _MGraph(g)
    if mg.nedges == 0:
        raise ValueError("minimum_dfs_code requires at least one edge")
    best_key = None
    embs: list[tuple[tuple[int, ...], frozenset[int]]] = []
    for u in range(len(mg.vlab)):
        for v, el, eid in mg.adj[u]:
            key = (mg.vlab[u], el, mg.vlab[v])
            if best_key is None or key < best_key:
                best_key, embs = key, []
            if key == best_key:
                embs.append(((u, v), frozenset([eid])))
    code: list[tuple[int, int, int, int, int]] = [(0, 1, *best_key)]

    while len(code) < mg.nedges:
        rm = _rightmost_path(code)
        maxtoc = code[rm[0]][1]
        labels = _code_labels(code)

        # Backward extensions beat forward ones; among backward, smaller
        # target then smaller edge label wins.
        best_b: tuple[int, int] | None = None
        bembs: list[tuple[tuple[int, ...], frozenset[int]]] = []
        for order, used in embs:
            r = order[maxtoc]
            for i in reversed(rm):
                if i == rm[0]:
                    continue
                tgt = code[i][0]
                w = order[tgt]
                for v, el, eid in mg.adj[r]:
                    if v != w or eid in used:
                        continue
                    key = (tgt, el)
                    if best_b is None or key < best_b:
                        best_b, bembs = key, []
                    if key == best_b:
                        bembs.append((order, used | {eid}))
        if best_b is not None:
            tgt, el = best_b
            code.append((maxtoc, tgt, labels[maxtoc], el, labels[tgt]))
            embs = bembs
            continue

        # Forward: deeper source first, then edge label, then target label.
        best_f: tuple[int, int, int] | None = None
        fembs: list[tuple[tuple[int, ...], frozenset[int]]] = []
        order_of_frm = [maxtoc] + [code[i][0] for i in rm]
        for order, used in embs:
            mapped = set(order)
            for frm_dfs in order_of_frm:
                u = order[frm_dfs]
                for v, el, eid in mg.adj[u]:
                    if v in mapped or eid in used:
                        continue
                    key = (maxtoc - frm_dfs, el, mg.vlab[v])
                    if best_f is None or key < best_f:
                        best_f, fembs = key, []
                    if key == best_f:
                        fembs.append((order + (v,), used | {eid}))
        if best_f is None:
            raise AssertionError("pattern graph must be connected")
        depth, el, wlab = best_f
        frm_dfs = maxtoc - depth
        code.append((frm_dfs, maxtoc + 1, labels[frm_dfs], el, wlab))
        embs = fembs

    return tuple(code)


# ---------------------------------------------------------------------------
# gSpan
# ---------------------------------------------------------------------------


class _Miner:
    def __init__(self, dataset: GraphDataset, config: MinerConfig):
        self.config = config
        self.num_graphs = len(dataset)
        self.l = dataset.node_attr_dim
        self.m = dataset.edge_attr_dim
        self.graphs = [_MGraph(g) for g in dataset.graphs]
        self.code: list[tuple[int, int, int, int, int]] = []
        self.results: list[FrequentPattern] = []
        # Support threshold: appearance rate >= tau, tolerant to float noise.
        self.min_support = config.tau * self.num_graphs - 1e-9

    def run(self) -> list[FrequentPattern]:
        root: dict[tuple[int, int, int], list[_PDFS]] = {}
        for gid, g in enumerate(self.graphs):
            for u in range(len(g.vlab)):
                for v, el, eid in g.adj[u]:
                    if g.vlab[u] > g.vlab[v]:
                        continue
                    key = (g.vlab[u], el, g.vlab[v])
                    root.setdefault(key, []).append(_PDFS(gid, u, v, el, eid, None))
        for key in sorted(root):
            self.code.append((0, 1, *key))
            self._mine(root[key])
            self.code.pop()
        self.results.sort(
            key=lambda p: (-p.appearance_rate, len(p.dfs_code), p.dfs_code)
        )
        return self.results

    def _support_ids(self, projected: list[_PDFS]) -> list[int]:
        return sorted({p.gid for p in projected})

    def _emit(self, support_ids: list[int]) -> None:
        code = tuple(self.code)
        graph = graph_from_dfs_code(code, self.l, self.m)
        self.results.append(
            FrequentPattern(
                graph=graph,
                appearance_rate=len(support_ids) / self.num_graphs,
                support_ids=tuple(support_ids),
                dfs_code=code,
            )
        )

    def _mine(self, projected: list[_PDFS]) -> None:
        support_ids = self._support_ids(projected)
        if len(support_ids) < self.min_support:
            return
        code = tuple(self.code)
        pattern = graph_from_dfs_code(code, self.l, self.m)
        if minimum_dfs_code(pattern) != code:
            return
        nodes = _code_node_count(self.code)
        if self.config.min_nodes <= nodes <= self.config.max_nodes:
            self._emit(support_ids)

        rm = _rightmost_path(self.code)
        maxtoc = self.code[rm[0]][1]
        min_vlb = self.code[0][2]
        labels = _code_labels(self.code)
        grow_forward = nodes < self.config.max_nodes

        backward: dict[tuple[int, int], list[_PDFS]] = {}
        forward: dict[tuple[int, int, int], list[_PDFS]] = {}
        for p in projected:
            g = self.graphs[p.gid]
            hist = _History(p)
            r = hist.edges[rm[0]].to
            # Backward: from the rightmost vertex to earlier rightmost-path
            # vertices, in canonical eligibility order.
            for i in reversed(rm):
                e1 = hist.edges[i]
                if e1 is hist.edges[rm[0]]:
                    continue
                e = self._backward_edge(g, e1, hist.edges[rm[0]], hist)
                if e is not None:
                    key = (self.code[i][0], e[1])
                    backward.setdefault(key, []).append(
                        _PDFS(p.gid, r, e[0], e[1], e[2], p)
                    )
            if not grow_forward:
                continue
            # Forward from the rightmost vertex.
            for v, el, eid in g.adj[r]:
                if g.vlab[v] >= min_vlb and v not in hist.vertices:
                    key = (maxtoc, el, g.vlab[v])
                    forward.setdefault(key, []).append(_PDFS(p.gid, r, v, el, eid, p))
            # Forward from the other rightmost-path vertices.
            for i in rm:
                e1 = hist.edges[i]
                to_vlb = g.vlab[e1.to]
                for v, el, eid in g.adj[e1.frm]:
                    if v == e1.to or g.vlab[v] < min_vlb or v in hist.vertices:
                        continue
                    if e1.elabel < el or (e1.elabel == el and to_vlb <= g.vlab[v]):
                        key = (self.code[i][0], el, g.vlab[v])
                        forward.setdefault(key, []).append(
                            _PDFS(p.gid, e1.frm, v, el, eid, p)
                        )

        for to_dfs, el in sorted(backward):
            self.code.append((maxtoc, to_dfs, labels[maxtoc], el, labels[to_dfs]))
            self._mine(backward[(to_dfs, el)])
            self.code.pop()
        for frm_dfs, el, wlab in sorted(forward, key=lambda k: (-k[0], k[1], k[2])):
            self.code.append((frm_dfs, maxtoc + 1, labels[frm_dfs], el, wlab))
            self._mine(forward[(frm_dfs, el, wlab)])
            self.code.pop()

    @staticmethod
    def _backward_edge(g: _MGraph, e1: _PDFS, e2: _PDFS, hist: _History):
        """Host edge closing the cycle rightmost-vertex -> e1.frm, if eligible."""
        for v, el, eid in g.adj[e2.to]:
            if eid in hist.eids or v != e1.frm:
                continue
            if e1.elabel < el or (e1.elabel == el and g.vlab[e1.to] <= g.vlab[e2.to]):
                return (v, el, eid)
        return None


def mine_frequent(dataset: GraphDataset, config: MinerConfig) -> list[FrequentPattern]:
    """All connected patterns with appearance rate >= tau and a node count in
    [min_nodes, max_nodes], each found exactly once via canonical pruning.

    The caller is expected to pass the undesired-classified subset.  Results
    are sorted by appearance rate (descending), then shorter DFS code, then
    lexicographic DFS code.
    """
    if len(dataset) == 0:
        raise ValueError("cannot mine an empty dataset")
    return _Miner(dataset, config).run()


def select_significant(
    patterns: list[FrequentPattern], k: int, mode: str = "top_ar"
) -> list[FrequentPattern]:
    """Pick K significant patterns: the K highest appearance rates (top_ar)
    or greedy marginal cover of not-yet-covered input graphs (greedy_cover)."""
    if k < 1:
        raise ValueError("K must be >= 1")
    if mode == "top_ar":
        return list(patterns[:k])
    if mode != "greedy_cover":
        raise ValueError("mode must be top_ar or greedy_cover")
    chosen: list[FrequentPattern] = []
    remaining = list(range(len(patterns)))
    covered: set[int] = set()
    while remaining and len(chosen) < k:
        best_idx, best_gain = None, -1
        for idx in remaining:
            gain = len(set(patterns[idx].support_ids) - covered)
            if gain > best_gain:
                best_idx, best_gain = idx, gain
        chosen.append(patterns[best_idx])
        covered.update(patterns[best_idx].support_ids)
        remaining.remove(best_idx)
    return chosen


# ---------------------------------------------------------------------------
# Pattern dump (one JSON record per line, header first)
# ---------------------------------------------------------------------------


def save_patterns(patterns: list[FrequentPattern], path: str, dataset: GraphDataset) -> None:
    header = {
        "format": PATTERN_FORMAT,
        "dataset": dataset.name,
        "node_vocab": list(dataset.node_vocab),
        "edge_vocab": list(dataset.edge_vocab),
        "count": len(patterns),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for p in patterns:
            rec = {
                "dfs_code": [list(t) for t in p.dfs_code],
                "appearance_rate": p.appearance_rate,
                "support_ids": list(p.support_ids),
            }
            fh.write(json.dumps(rec) + "\n")


def load_patterns(path: str) -> tuple[list[FrequentPattern], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty pattern dump: {path}")
    header = json.loads(lines[0])
    if header.get("format") != PATTERN_FORMAT:
        raise ValueError(f"unsupported pattern dump format: {header.get('format')!r}")
    l = max(len(header["node_vocab"]), 1)
    m = len(header["edge_vocab"])
    patterns = []
    for line in lines[1:]:
        rec = json.loads(line)
        code = tuple(tuple(int(x) for x in t) for t in rec["dfs_code"])
        patterns.append(
            FrequentPattern(
                graph=graph_from_dfs_code(code, l, m),
                appearance_rate=float(rec["appearance_rate"]),
                support_ids=tuple(int(i) for i in rec["support_ids"]),
                dfs_code=code,
            )
        )
    return patterns, header
