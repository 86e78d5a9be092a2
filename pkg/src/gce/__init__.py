"""Global counterfactual explanations for black-box graph classifiers.

The pipeline: mine significant subgraphs from the graphs a classifier
rejects, learn a counterfactual rewrite for each subgraph with a small
conditional variational autoencoder, greedily pick a budgeted rule set
that flips as many rejected graphs as possible, and score the result
with coverage / proximity / comprehensibility.
"""

from gce.graphs import (
    Graph,
    GraphDataset,
    WeightedDistanceConfig,
    connected_components,
    generate_synthetic,
    graph_distance,
    graph_from_edges,
    parse_tu_dataset,
    symmetric_difference,
    write_tu_dataset,
)
from gce.matching import Occurrence, contains, find_occurrences, is_isomorphic
from gce.mining import FrequentPattern, MinerConfig, mine_frequent, select_significant
from gce.classifier import ClassifierModel, TrainConfig, forward, gradient_check, predict, train
from gce.autoencoder import (
    CsaConfig,
    CsaModel,
    CsmCandidate,
    ProbabilisticSubgraph,
    compose_soft,
    decode,
    discretize,
    encode,
    loss,
    sample_latent,
    train_csa,
)
from gce.summarize import (
    CoverageReport,
    CsmSet,
    apply_csm,
    brute_force_select,
    coverage,
    enumerate_applications,
    greedy_select,
    is_covered,
)
from gce.metrics import EvaluationResult, comprehensibility, evaluate_global, evaluate_local, proximity

__all__ = [
    "Graph",
    "GraphDataset",
    "WeightedDistanceConfig",
    "graph_from_edges",
    "parse_tu_dataset",
    "write_tu_dataset",
    "generate_synthetic",
    "graph_distance",
    "symmetric_difference",
    "connected_components",
    "Occurrence",
    "find_occurrences",
    "contains",
    "is_isomorphic",
    "FrequentPattern",
    "MinerConfig",
    "mine_frequent",
    "select_significant",
    "ClassifierModel",
    "TrainConfig",
    "forward",
    "predict",
    "train",
    "gradient_check",
    "CsaConfig",
    "CsaModel",
    "ProbabilisticSubgraph",
    "CsmCandidate",
    "encode",
    "sample_latent",
    "decode",
    "compose_soft",
    "loss",
    "train_csa",
    "discretize",
    "CsmSet",
    "CoverageReport",
    "apply_csm",
    "enumerate_applications",
    "is_covered",
    "coverage",
    "greedy_select",
    "brute_force_select",
    "EvaluationResult",
    "proximity",
    "comprehensibility",
    "evaluate_global",
    "evaluate_local",
]
