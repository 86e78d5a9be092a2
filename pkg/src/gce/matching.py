"""Label-respecting subgraph isomorphism.

`find_occurrences` enumerates injective, label- and edge-preserving maps of a
pattern into a host graph (edge monomorphism: the host may have extra edges
among the image nodes).  This is the operational meaning of pattern
containment used by support counting, coverage, and rule application.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gce.graphs import Graph

__all__ = ["Occurrence", "find_occurrences", "contains", "is_isomorphic"]


@dataclass(frozen=True)
class Occurrence:
    """Injective node map from a pattern into a host graph.

    mapping[p] is the host node playing pattern node p.  pattern_ref and
    host_ref are caller-chosen identifiers (-1 when untracked).
    """

    mapping: tuple[int, ...]
    pattern_ref: int = -1
    host_ref: int = -1

    @property
    def image(self) -> frozenset[int]:
        return frozenset(self.mapping)


def _label_arrays(g: Graph) -> tuple[np.ndarray, list[list[int]], dict[tuple[int, int], int]]:
    labels = g.node_labels()
    nbrs = [g.neighbors(i) for i in range(g.node_count)]
    elabels = {}
    if g.edge_attr_dim > 0:
        for (i, j), vec in g.edge_attrs.items():
            lab = int(np.argmax(vec))
            elabels[(i, j)] = lab
            elabels[(j, i)] = lab
    return labels, nbrs, elabels


def _search(
    pattern: Graph,
    host: Graph,
    limit: int | None,
    induced: bool,
) -> list[tuple[int, ...]]:
    """Backtracking enumeration of injective label/edge preserving maps.

    Pattern nodes are matched in an order that prefers rare host labels and
    high pattern degree; host candidates are tried in increasing index order,
    so the enumeration itself is deterministic.  Stops early at `limit`
    distinct image node sets (None = exhaustive).
    """
    np_, nh = pattern.node_count, host.node_count
    if np_ == 0 or np_ > nh:
        return []
    plab, pnbrs, pelab = _label_arrays(pattern)
    hlab, hnbrs, helab = _label_arrays(host)
    check_elabels = pattern.edge_attr_dim > 0

    host_label_count: dict[int, int] = {}
    for lab in hlab.tolist():
        host_label_count[lab] = host_label_count.get(lab, 0) + 1
    for lab in plab.tolist():
        if host_label_count.get(lab, 0) == 0:
            return []

    # Match order: rarest host label first, then high degree; connected-first
    # so each new node (after the first) has at least one matched neighbor.
    order: list[int] = []
    placed = set()
    key = lambda p: (host_label_count.get(int(plab[p]), 0), -len(pnbrs[p]), p)
    remaining = sorted(range(np_), key=key)
    while remaining:
        anchor = None
        for p in remaining:
            if any(q in placed for q in pnbrs[p]):
                anchor = p
                break
        if anchor is None:
            anchor = remaining[0]
        order.append(anchor)
        placed.add(anchor)
        remaining.remove(anchor)

    pos_in_order = {p: t for t, p in enumerate(order)}
    # For each step, the pattern neighbors already placed (for pruning).
    placed_nbrs = [
        [q for q in pnbrs[p] if pos_in_order[q] < t] for t, p in enumerate(order)
    ]

    results: list[tuple[int, ...]] = []
    seen_images: set[frozenset[int]] = set()
    mapping = [-1] * np_
    used = [False] * nh
    hadj = host.adjacency

    def feasible(p: int, h: int, anchored: list[int]) -> bool:
        if int(plab[p]) != int(hlab[h]):
            return False
        if len(pnbrs[p]) > len(hnbrs[h]):
            return False
        for q in anchored:
            hq = mapping[q]
            if not hadj[h, hq]:
                return False
            if check_elabels and pelab[(p, q)] != helab.get((h, hq), -1):
                return False
        if induced:
            # Non-adjacent placed pattern nodes must stay non-adjacent.
            for q in range(np_):
                hq = mapping[q]
                if hq >= 0 and q != p and not pattern.adjacency[p, q] and hadj[h, hq]:
                    return False
        return True

    def backtrack(t: int) -> bool:
        if t == np_:
            image = frozenset(mapping)
            if image not in seen_images:
                seen_images.add(image)
                results.append(tuple(mapping))
                if limit is not None and len(seen_images) >= limit:
                    return True
            return False
        p = order[t]
        anchored = placed_nbrs[t]
        if anchored:
            candidates = sorted(hnbrs[mapping[anchored[0]]])
        else:
            candidates = range(nh)
        for h in candidates:
            if used[h] or not feasible(p, h, anchored):
                continue
            mapping[p] = h
            used[h] = True
            if backtrack(t + 1):
                return True
            mapping[p] = -1
            used[h] = False
        return False

    backtrack(0)
    return results


def find_occurrences(
    pattern: Graph,
    host: Graph,
    max_count: int = 10,
    induced: bool = False,
    pattern_ref: int = -1,
    host_ref: int = -1,
) -> list[Occurrence]:
    """Up to max_count occurrences of pattern in host.

    Results are deduplicated by image node set and returned in lexicographic
    order of the sorted image indices (one representative mapping per image).
    """
    if pattern.node_count < 1:
        raise ValueError("pattern must have at least one node")
    if max_count < 1:
        raise ValueError("max_count must be >= 1")
    mappings = _search(pattern, host, None, induced)
    mappings.sort(key=lambda m: sorted(m))
    return [
        Occurrence(m, pattern_ref, host_ref) for m in mappings[:max_count]
    ]


def contains(pattern: Graph, host: Graph, induced: bool = False) -> bool:
    """True iff at least one occurrence of pattern exists in host."""
    if pattern.node_count < 1:
        raise ValueError("pattern must have at least one node")
    return bool(_search(pattern, host, 1, induced))


def is_isomorphic(a: Graph, b: Graph) -> bool:
    """Label-preserving bijective edge-and-nonedge-preserving equivalence."""
    if a.node_count != b.node_count:
        return False
    if a.node_count == 0:
        return True
    if int(a.adjacency.sum()) != int(b.adjacency.sum()):
        return False
    if sorted(a.node_labels().tolist()) != sorted(b.node_labels().tolist()):
        return False
    if sorted(a.adjacency.sum(axis=1).tolist()) != sorted(b.adjacency.sum(axis=1).tolist()):
        return False
    return bool(_search(a, b, 1, induced=True))
