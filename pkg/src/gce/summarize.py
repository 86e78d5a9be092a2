"""Applying rewrite rules, the coverage function, and budgeted selection.

A rule (CSM) rewrites one occurrence of its source pattern inside a host:
matched nodes take the counterfactual's base block (attributes and intra-block
edges), extra counterfactual nodes are appended, and every host edge with an
endpoint outside the match survives untouched.  A host counts as covered when
some combination of at most `max_simultaneous` non-overlapping applications
produces a graph the classifier labels desired.  Selection greedily maximizes
marginal coverage, with an exhaustive optimizer kept alongside as the test
oracle for the approximation bound.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from gce.autoencoder import CsmCandidate
from gce.classifier import ClassifierModel, predict
from gce.graphs import Graph, GraphDataset, WeightedDistanceConfig, graph_distance, graphs_equal
from gce.matching import Occurrence, find_occurrences, is_isomorphic

__all__ = [
    "CsmSet",
    "CoverageReport",
    "apply_csm",
    "enumerate_applications",
    "is_covered",
    "coverage",
    "greedy_select",
    "brute_force_select",
    "export_rules",
    "load_rules",
]

RULES_FORMAT = "gce-rules-v1"


@dataclass(frozen=True)
class CsmSet:
    """An ordered budgeted set of rewrite rules with non-isomorphic sources."""

    csms: tuple[CsmCandidate, ...]
    budget_k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "csms", tuple(self.csms))
        if len(self.csms) > self.budget_k:
            raise ValueError("more rules than the budget allows")
        for i, a in enumerate(self.csms):
            for b in self.csms[i + 1 :]:
                if is_isomorphic(a.source, b.source):
                    raise ValueError("rule sources must be pairwise non-isomorphic")


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    covered_ids: tuple[int, ...]
    evaluated_ids: tuple[int, ...]
    best_counterfactuals: dict[int, tuple[Graph, float, tuple]]
    per_csm_marginals: tuple = ()

    @property
    def covered_count(self) -> int:
        return len(self.covered_ids)


def apply_csm(host: Graph, csm: CsmCandidate, occ: Occurrence) -> Graph:
    """Rewrite one occurrence of csm.source inside host."""
    src, cf = csm.source, csm.counterfactual
    n_src = src.node_count
    if len(occ.mapping) != n_src or max(occ.mapping) >= host.node_count:
        raise ValueError("occurrence does not match the rule source and host")
    for p in range(n_src):
        if not (src.node_attrs[p] == host.node_attrs[occ.mapping[p]]).all():
            raise ValueError("occurrence violates label preservation")
    for i, j in src.edges():
        if not host.adjacency[occ.mapping[i], occ.mapping[j]]:
            raise ValueError("occurrence violates edge preservation")

    n_host = host.node_count
    n_extra = cf.node_count - n_src
    n_new = n_host + n_extra
    # counterfactual node j sits at host position cpos[j]
    cpos = [occ.mapping[csm.correspondence[j]] for j in range(n_src)] + [
        n_host + t for t in range(n_extra)
    ]

    adjacency = np.zeros((n_new, n_new), dtype=np.int8)
    adjacency[:n_host, :n_host] = host.adjacency
    image = set(occ.mapping)
    for a in image:
        for b in image:
            adjacency[a, b] = 0
    for i, j in cf.edges():
        adjacency[cpos[i], cpos[j]] = adjacency[cpos[j], cpos[i]] = 1

    node_attrs = np.zeros((n_new, host.node_attr_dim), dtype=np.int8)
    node_attrs[:n_host] = host.node_attrs
    for j in range(cf.node_count):
        node_attrs[cpos[j]] = cf.node_attrs[j]

    edge_attrs: dict[tuple[int, int], np.ndarray] = {}
    if host.edge_attr_dim > 0:
        for (a, b), vec in host.edge_attrs.items():
            if a in image and b in image:
                continue
            edge_attrs[(a, b)] = vec
        for i, j in cf.edges():
            a, b = cpos[i], cpos[j]
            key = (a, b) if a < b else (b, a)
            edge_attrs[key] = cf.edge_attrs[(i, j) if i < j else (j, i)]

    return Graph(adjacency, node_attrs, edge_attrs, host.edge_attr_dim)


def _applications(
    host: Graph, csm_set: CsmSet, max_occ: int
) -> list[tuple[int, int, Occurrence]]:
    """All single-application slots (csm index, occurrence index, occurrence)."""
    out = []
    for ci, csm in enumerate(csm_set.csms):
        occs = find_occurrences(csm.source, host, max_occ)
        for oi, occ in enumerate(occs):
            out.append((ci, oi, occ))
    return out


def _enumerate_with_provenance(
    host: Graph,
    csm_set: CsmSet,
    max_simultaneous: int = 2,
    max_occ: int = 10,
) -> list[tuple[Graph, tuple[tuple[int, int], ...]]]:
    singles = _applications(host, csm_set, max_occ)
    results: list[tuple[Graph, tuple[tuple[int, int], ...]]] = []
    seen: list[Graph] = []

    def push(graph: Graph, prov: tuple[tuple[int, int], ...]) -> None:
        for other in seen:
            if graphs_equal(graph, other):
                return
        seen.append(graph)
        results.append((graph, prov))

    applied: dict[tuple[int, int], Graph] = {}
    for ci, oi, occ in singles:
        g = apply_csm(host, csm_set.csms[ci], occ)
        applied[(ci, oi)] = g
        push(g, ((ci, oi),))

    if max_simultaneous >= 2:
        for (a, b) in itertools.combinations(range(len(singles)), 2):
            ci_a, oi_a, occ_a = singles[a]
            ci_b, oi_b, occ_b = singles[b]
            if set(occ_a.mapping) & set(occ_b.mapping):
                continue
            first = applied[(ci_a, oi_a)]
            g = apply_csm(first, csm_set.csms[ci_b], occ_b)
            push(g, ((ci_a, oi_a), (ci_b, oi_b)))
    return results


def enumerate_applications(
    host: Graph,
    csm_set: CsmSet,
    max_simultaneous: int = 2,
    max_occ: int = 10,
) -> list[Graph]:
    """Candidate counterfactuals: every single application, then every
    unordered pair of applications with disjoint node images, deduplicated
    by structural equality, in deterministic order."""
    if max_simultaneous > 2:
        # Supported upward for experimentation, but the combinatorial cost
        # grows as (applications choose max_simultaneous).
        return _enumerate_deep(host, csm_set, max_simultaneous, max_occ)
    return [g for g, _ in _enumerate_with_provenance(host, csm_set, max_simultaneous, max_occ)]


def _enumerate_deep(host, csm_set, max_simultaneous, max_occ):
    singles = _applications(host, csm_set, max_occ)
    results: list[Graph] = []
    for r in range(1, max_simultaneous + 1):
        for combo in itertools.combinations(range(len(singles)), r):
            images = [set(singles[i][2].mapping) for i in combo]
            if any(a & b for a, b in itertools.combinations(images, 2)):
                continue
            g = host
            for i in combo:
                ci, _, occ = singles[i]
                g = apply_csm(g, csm_set.csms[ci], occ)
            if not any(graphs_equal(g, other) for other in results):
                results.append(g)
    return results


class CoverageEvaluator:
    """Shared lazy cache of per-host application predictions.

    Keyed by host id and application combination, so greedy rounds and the
    final report never re-classify the same candidate twice.
    """

    def __init__(
        self,
        dataset: GraphDataset,
        host_ids: list[int],
        candidates: list[CsmCandidate],
        classifier: ClassifierModel,
        weights: WeightedDistanceConfig,
        max_simultaneous: int = 2,
        max_occ: int = 10,
        threads: int = 1,
    ):
        self.dataset = dataset
        self.host_ids = list(host_ids)
        self.candidates = candidates
        self.classifier = classifier
        self.weights = weights
        self.max_simultaneous = max_simultaneous
        self.max_occ = max_occ
        self.threads = max(1, threads)
        self._slots: dict[int, list[tuple[int, int, Occurrence]]] = {}
        self._graph_cache: dict[tuple[int, tuple[tuple[int, int], ...]], Graph] = {}
        self._verdict_cache: dict[tuple[int, tuple[tuple[int, int], ...]], bool] = {}

    def _host(self, hid: int) -> Graph:
        return self.dataset.graphs[hid]

    def slots(self, hid: int) -> list[tuple[int, int, Occurrence]]:
        if hid not in self._slots:
            full = CsmSet(tuple(self.candidates), len(self.candidates))
            self._slots[hid] = _applications(self._host(hid), full, self.max_occ)
        return self._slots[hid]

    def _apply(self, hid: int, combo: tuple[tuple[int, int], ...]) -> Graph:
        key = (hid, combo)
        if key not in self._graph_cache:
            slot_by_id = {(ci, oi): occ for ci, oi, occ in self.slots(hid)}
            g = self._host(hid)
            for ci, oi in combo:
                g = apply_csm(g, self.candidates[ci], slot_by_id[(ci, oi)])
            self._graph_cache[key] = g
        return self._graph_cache[key]

    def _flips(self, hid: int, combo: tuple[tuple[int, int], ...]) -> bool:
        key = (hid, combo)
        if key not in self._verdict_cache:
            graph = self._apply(hid, combo)
            self._verdict_cache[key] = predict(self.classifier, graph) == 1
        return self._verdict_cache[key]

    def combos(self, hid: int, selected: list[int]) -> list[tuple[tuple[int, int], ...]]:
        """Deterministic combination order: singles, then disjoint pairs."""
        chosen = set(selected)
        slots = [(ci, oi, occ) for ci, oi, occ in self.slots(hid) if ci in chosen]
        out: list[tuple[tuple[int, int], ...]] = [((ci, oi),) for ci, oi, _ in slots]
        if self.max_simultaneous >= 2:
            for a, b in itertools.combinations(range(len(slots)), 2):
                ca, oa, occ_a = slots[a]
                cb, ob, occ_b = slots[b]
                if set(occ_a.mapping) & set(occ_b.mapping):
                    continue
                out.append(((ca, oa), (cb, ob)))
        return out

    def covered(self, hid: int, selected: list[int]) -> bool:
        return any(self._flips(hid, combo) for combo in self.combos(hid, selected))

    def best(self, hid: int, selected: list[int]):
        """Full enumeration: the valid candidate minimizing the distance from
        the host (deterministic first-hit on ties)."""
        host = self._host(hid)
        best_tuple = None
        for combo in self.combos(hid, selected):
            if not self._flips(hid, combo):
                continue
            graph = self._apply(hid, combo)
            dist = graph_distance(host, graph, self.weights)
            if best_tuple is None or dist < best_tuple[1]:
                best_tuple = (graph, dist, combo)
        return best_tuple

    def covered_set(self, selected: list[int]) -> set[int]:
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                verdicts = list(pool.map(lambda h: self.covered(h, selected), self.host_ids))
            return {h for h, v in zip(self.host_ids, verdicts) if v}
        return {h for h in self.host_ids if self.covered(h, selected)}


def _undesired_ids(dataset: GraphDataset, classifier: ClassifierModel) -> list[int]:
    return [i for i, g in enumerate(dataset.graphs) if predict(classifier, g) == 0]


def is_covered(
    host: Graph,
    csm_set: CsmSet,
    classifier: ClassifierModel,
    weights: WeightedDistanceConfig | None = None,
    max_simultaneous: int = 2,
    max_occ: int = 10,
) -> tuple[bool, tuple[Graph, float] | None]:
    """Whether some application combination flips the host to the desired
    class, and the minimum-distance valid counterfactual if so."""
    weights = weights or WeightedDistanceConfig()
    ds = GraphDataset((host,), (0,), *_vocab_of(host), "host")
    ev = CoverageEvaluator(ds, [0], list(csm_set.csms), classifier, weights,
                           max_simultaneous, max_occ)
    best = ev.best(0, list(range(len(csm_set.csms))))
    if best is None:
        return False, None
    return True, (best[0], best[1])


def _vocab_of(g: Graph) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return (
        tuple(str(i) for i in range(g.node_attr_dim)),
        tuple(str(i) for i in range(g.edge_attr_dim)),
    )


def coverage(
    csm_set: CsmSet,
    dataset: GraphDataset,
    classifier: ClassifierModel,
    weights: WeightedDistanceConfig | None = None,
    max_simultaneous: int = 2,
    max_occ: int = 10,
    threads: int = 1,
) -> CoverageReport:
    """Fraction of classifier-undesired graphs covered by the rule set, with
    the best counterfactual per covered host."""
    if len(dataset) == 0:
        raise ValueError("cannot evaluate coverage on an empty dataset")
    weights = weights or WeightedDistanceConfig()
    host_ids = _undesired_ids(dataset, classifier)
    if not host_ids:
        raise ValueError("no classifier-undesired graphs to evaluate")
    ev = CoverageEvaluator(dataset, host_ids, list(csm_set.csms), classifier,
                           weights, max_simultaneous, max_occ, threads)
    selected = list(range(len(csm_set.csms)))
    best_cf: dict[int, tuple[Graph, float, tuple]] = {}
    for hid in host_ids:
        best = ev.best(hid, selected)
        if best is not None:
            best_cf[hid] = best
    covered_ids = tuple(sorted(best_cf))
    return CoverageReport(
        coverage=len(covered_ids) / len(host_ids),
        covered_ids=covered_ids,
        evaluated_ids=tuple(host_ids),
        best_counterfactuals=best_cf,
    )


def greedy_select(
    candidates: list[CsmCandidate],
    k: int,
    dataset: GraphDataset,
    classifier: ClassifierModel,
    weights: WeightedDistanceConfig | None = None,
    max_simultaneous: int = 2,
    max_occ: int = 10,
    threads: int = 1,
) -> tuple[CsmSet, list[dict]]:
    """k rounds of maximal marginal coverage over the candidate pool.

    Ties break toward the candidate whose newly covered hosts sit at lower
    mean distance, then toward the lower candidate index.  The trace records
    the marginal gain of every round.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(candidates):
        raise ValueError("k cannot exceed the candidate count")
    weights = weights or WeightedDistanceConfig()
    host_ids = _undesired_ids(dataset, classifier)
    if not host_ids:
        raise ValueError("no classifier-undesired graphs to evaluate")
    ev = CoverageEvaluator(dataset, host_ids, candidates, classifier, weights,
                           max_simultaneous, max_occ, threads)

    selected: list[int] = []
    covered: set[int] = set()
    trace: list[dict] = []
    remaining = list(range(len(candidates)))
    for _round in range(k):
        best_idx = None
        best_key = None  # (-gain, mean distance, index)
        best_new: set[int] = set()
        for idx in remaining:
            trial = selected + [idx]
            newly = {
                h for h in host_ids if h not in covered and ev.covered(h, trial)
            }
            gain = len(newly)
            if gain > 0:
                dists = [ev.best(h, trial)[1] for h in sorted(newly)]
                mean_dist = float(np.mean(dists))
            else:
                mean_dist = float("inf")
            key = (-gain, mean_dist, idx)
            if best_key is None or key < best_key:
                best_key, best_idx, best_new = key, idx, newly
        selected.append(best_idx)
        covered |= best_new
        remaining.remove(best_idx)
        trace.append(
            {
                "round": len(selected),
                "candidate_index": best_idx,
                "marginal_covered": len(best_new),
                "covered_total": len(covered),
            }
        )
    chosen = CsmSet(tuple(candidates[i] for i in selected), k)
    return chosen, trace


def brute_force_select(
    candidates: list[CsmCandidate],
    k: int,
    dataset: GraphDataset,
    classifier: ClassifierModel,
    weights: WeightedDistanceConfig | None = None,
    max_simultaneous: int = 2,
    max_occ: int = 10,
) -> CsmSet:
    """Exact optimum by exhaustive subset enumeration (test oracle)."""
    if k < 1 or k > len(candidates):
        raise ValueError("need 1 <= k <= number of candidates")
    from math import comb

    if comb(len(candidates), k) > 1_000_000:
        raise ValueError("combinatorial budget exceeded")
    weights = weights or WeightedDistanceConfig()
    host_ids = _undesired_ids(dataset, classifier)
    if not host_ids:
        raise ValueError("no classifier-undesired graphs to evaluate")
    ev = CoverageEvaluator(dataset, host_ids, candidates, classifier, weights,
                           max_simultaneous, max_occ)
    best_subset = None
    best_count = -1
    for combo in itertools.combinations(range(len(candidates)), k):
        count = len(ev.covered_set(list(combo)))
        if count > best_count:
            best_count = count
            best_subset = combo
    return CsmSet(tuple(candidates[i] for i in best_subset), k)


# ---------------------------------------------------------------------------
# Rule export
# ---------------------------------------------------------------------------


def export_rules(
    csm_set: CsmSet,
    trace: list[dict],
    report: CoverageReport,
    path: str,
    text_path: str | None = None,
) -> None:
    """Machine-readable rule records plus an optional human-readable report."""
    header = {
        "format": RULES_FORMAT,
        "k": csm_set.budget_k,
        "coverage": report.coverage,
        "covered": len(report.covered_ids),
        "evaluated": len(report.evaluated_ids),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rank, csm in enumerate(csm_set.csms):
            rec = {
                "rank": rank,
                "source": csm.source.to_dict(),
                "counterfactual": csm.counterfactual.to_dict(),
                "correspondence": list(csm.correspondence),
                "marginal_covered": trace[rank]["marginal_covered"] if rank < len(trace) else None,
                "train_stats": csm.train_stats,
            }
            fh.write(json.dumps(rec) + "\n")
    if text_path is not None:
        with open(text_path, "w", encoding="utf-8") as fh:
            fh.write(
                f"rule set: k={csm_set.budget_k} coverage={report.coverage:.4f} "
                f"({len(report.covered_ids)}/{len(report.evaluated_ids)} hosts)\n"
            )
            for rank, csm in enumerate(csm_set.csms):
                fh.write(f"\nrule {rank}\n")
                fh.write(f"  source: {_describe(csm.source)}\n")
                fh.write(f"  counterfactual: {_describe(csm.counterfactual)}\n")
                fh.write(f"  correspondence: {list(csm.correspondence)}\n")
                if rank < len(trace):
                    fh.write(f"  marginal coverage: {trace[rank]['marginal_covered']} hosts\n")
                example = next(
                    (
                        (hid, cf)
                        for hid, (cf, _, combo) in sorted(report.best_counterfactuals.items())
                        if any(ci == rank for ci, _ in combo)
                    ),
                    None,
                )
                if example is not None:
                    fh.write(
                        f"  example: host {example[0]} -> {_describe(example[1])}\n"
                    )


def _describe(g: Graph) -> str:
    return f"{g.node_count} nodes, edges {g.edges()}, labels {g.node_labels().tolist()}"


def load_rules(path: str) -> tuple[list[CsmCandidate], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty rules file: {path}")
    header = json.loads(lines[0])
    if header.get("format") != RULES_FORMAT:
        raise ValueError(f"unsupported rules format: {header.get('format')!r}")
    out = []
    for line in lines[1:]:
        rec = json.loads(line)
        out.append(
            CsmCandidate(
                source=Graph.from_dict(rec["source"]),
                counterfactual=Graph.from_dict(rec["counterfactual"]),
                correspondence=tuple(rec["correspondence"]),
                train_stats=rec.get("train_stats", {}),
            )
        )
    return out, header
