"""Evaluation metrics: coverage percentage, proximity, comprehensibility.

Proximity averages, over covered hosts, the minimum weighted distance from
the host to a valid counterfactual.  Comprehensibility inverts the mean
connected-component count of the edge symmetric-difference graphs (minus
0.9, so a single-component edit scores exactly 10); spatially concentrated
edits score higher.  Both are undefined (None) when nothing is covered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from gce.classifier import ClassifierModel, predict
from gce.graphs import (
    Graph,
    GraphDataset,
    WeightedDistanceConfig,
    connected_components,
    graph_distance,
    symmetric_difference,
)
from gce.summarize import CoverageReport, CsmSet, coverage

__all__ = [
    "EvaluationResult",
    "proximity",
    "comprehensibility",
    "evaluate_global",
    "evaluate_local",
    "write_results",
    "load_results",
]

RESULTS_FORMAT = "gce-results-v1"


@dataclass(frozen=True)
class EvaluationResult:
    coverage_pct: float
    proximity: float | None
    comprehensibility: float | None
    covered_count: int
    evaluated_count: int
    pairs: tuple[tuple[int, Graph, float, int], ...]  # (host id, cf, distance, cc)

    def summary(self) -> dict:
        return {
            "coverage_pct": round(self.coverage_pct, 2),
            "proximity": None if self.proximity is None else round(self.proximity, 4),
            "comprehensibility": None
            if self.comprehensibility is None
            else round(self.comprehensibility, 4),
            "covered_count": self.covered_count,
            "evaluated_count": self.evaluated_count,
        }


def proximity(distances: list[float]) -> float | None:
    """Mean of the per-host minimum distances; None when nothing is covered."""
    if not distances:
        return None
    return float(sum(distances) / len(distances))


def comprehensibility(component_counts: list[int]) -> float | None:
    """Inverse of (mean symmetric-difference component count - 0.9)."""
    if not component_counts:
        return None
    mean_cc = sum(component_counts) / len(component_counts)
    return float(1.0 / (mean_cc - 0.9))


def _pairs_from(
    host_pairs: list[tuple[int, Graph, Graph]], weights: WeightedDistanceConfig
) -> tuple[tuple[int, Graph, float, int], ...]:
    out = []
    for hid, host, cf in host_pairs:
        dist = graph_distance(host, cf, weights)
        cc = connected_components(symmetric_difference(host, cf))
        out.append((hid, cf, dist, cc))
    return tuple(out)


def evaluate_global(
    csm_set: CsmSet,
    dataset: GraphDataset,
    classifier: ClassifierModel,
    distance_weights: WeightedDistanceConfig | None = None,
    max_simultaneous: int = 2,
    max_occ: int = 10,
    threads: int = 1,
    report: CoverageReport | None = None,
) -> EvaluationResult:
    """Run coverage and compute the metric triple over its best pairs.

    A precomputed CoverageReport may be supplied to avoid re-evaluating
    (the pairs are recomputed from it deterministically either way).
    """
    weights = distance_weights or WeightedDistanceConfig()
    if report is None:
        report = coverage(
            csm_set, dataset, classifier, weights, max_simultaneous, max_occ, threads
        )
    host_pairs = [
        (hid, dataset.graphs[hid], cf)
        for hid, (cf, _, _) in sorted(report.best_counterfactuals.items())
    ]
    pairs = _pairs_from(host_pairs, weights)
    return EvaluationResult(
        coverage_pct=100.0 * report.coverage,
        proximity=proximity([d for _, _, d, _ in pairs]),
        comprehensibility=comprehensibility([cc for _, _, _, cc in pairs]),
        covered_count=len(pairs),
        evaluated_count=len(report.evaluated_ids),
        pairs=pairs,
    )


def evaluate_local(
    pairs: list[tuple[Graph, Graph | None]],
    classifier: ClassifierModel,
    distance_weights: WeightedDistanceConfig | None = None,
) -> EvaluationResult:
    """Metrics for one-counterfactual-per-host explainers.

    A pair is valid when its counterfactual exists and the classifier labels
    it desired; coverage is the valid fraction, proximity/comprehensibility
    run over valid pairs only.
    """
    weights = distance_weights or WeightedDistanceConfig()
    valid: list[tuple[int, Graph, Graph]] = []
    for hid, (host, cf) in enumerate(pairs):
        if cf is not None and predict(classifier, cf) == 1:
            valid.append((hid, host, cf))
    metric_pairs = _pairs_from(valid, weights)
    return EvaluationResult(
        coverage_pct=100.0 * len(valid) / len(pairs) if pairs else 0.0,
        proximity=proximity([d for _, _, d, _ in metric_pairs]),
        comprehensibility=comprehensibility([cc for _, _, _, cc in metric_pairs]),
        covered_count=len(valid),
        evaluated_count=len(pairs),
        pairs=metric_pairs,
    )


# ---------------------------------------------------------------------------
# Results file
# ---------------------------------------------------------------------------


def write_results(
    result: EvaluationResult,
    path: str,
    seed: int | None = None,
    applications: dict[int, tuple] | None = None,
) -> None:
    """One summary record, then one record per evaluated covered host."""
    header = {"format": RESULTS_FORMAT, "seed": seed}
    header.update(result.summary())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for hid, cf, dist, cc in result.pairs:
            rec = {
                "host_id": hid,
                "covered": True,
                "distance": dist,
                "cc": cc,
                "counterfactual": cf.to_dict(),
                "applications": list(applications.get(hid, ())) if applications else None,
            }
            fh.write(json.dumps(rec) + "\n")


def load_results(path: str) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty results file: {path}")
    header = json.loads(lines[0])
    if header.get("format") != RESULTS_FORMAT:
        raise ValueError(f"unsupported results format: {header.get('format')!r}")
    return header, [json.loads(line) for line in lines[1:]]
