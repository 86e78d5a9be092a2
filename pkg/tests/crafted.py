"""Hand-built fixtures shared by the summarizer, metrics, and acceptance tests.

`label_detector_model` wires a GCN by hand so that it predicts the desired
class exactly when a graph contains a node with a chosen label.  Coverage of
rule sets under this classifier reduces to plain set coverage of the rules'
supports, which makes greedy bounds and submodularity exact and lets the
tests drive the real application/enumeration machinery end to end.
"""

from __future__ import annotations

import numpy as np

from gce.autoencoder import CsmCandidate
from gce.classifier import ClassifierModel
from gce.graphs import Graph, GraphDataset, graph_from_edges


def label_detector_model(num_labels: int, magic_label: int) -> ClassifierModel:
    """Predicts class 1 iff some node carries `magic_label` (crisp margins
    for graphs up to a few dozen nodes)."""
    h = 32
    W1 = np.zeros((num_labels, h))
    W1[magic_label, 0] = 10.0
    W2 = np.zeros((h, h))
    W2[0, 0] = 10.0
    Wh = np.zeros((h, 2))
    Wh[0, 1] = 10.0
    params = {
        "W1": W1,
        "b1": np.zeros(h),
        "W2": W2,
        "b2": np.zeros(h),
        "Wh": Wh,
        "bh": np.array([0.5, 0.0]),
    }
    return ClassifierModel("gcn", num_labels, 0, params)


def edge_rule(
    src_labels: list[int],
    src_edges: list[tuple[int, int]],
    cf_labels: list[int],
    cf_edges: list[tuple[int, int]],
    num_labels: int,
) -> CsmCandidate:
    """Rule whose counterfactual keeps the source's node count (pure relabel
    or rewire); correspondence is the identity."""
    src = graph_from_edges(len(src_labels), src_edges, src_labels, num_labels)
    cf = graph_from_edges(len(cf_labels), cf_edges, cf_labels, num_labels)
    return CsmCandidate(src, cf, tuple(range(len(src_labels))), {})


def random_host_dataset(
    rng: np.random.Generator,
    count: int,
    num_labels: int,
    magic_label: int,
    n_lo: int = 4,
    n_hi: int = 9,
) -> GraphDataset:
    """Connected-ish random hosts whose labels avoid the magic label, so the
    detector classifies all of them undesired."""
    graphs = []
    allowed = [c for c in range(num_labels) if c != magic_label]
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi))
        labels = rng.choice(allowed, size=n).tolist()
        edges = [(int(rng.integers(0, j)), j) for j in range(1, n)]
        extra = int(rng.integers(0, 3))
        for _ in range(extra):
            i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
            if (i, j) not in edges:
                edges.append((i, j))
        graphs.append(graph_from_edges(n, edges, labels, num_labels))
    return GraphDataset(
        tuple(graphs),
        tuple(0 for _ in graphs),
        tuple(str(i) for i in range(num_labels)),
        (),
        "hosts",
    )
