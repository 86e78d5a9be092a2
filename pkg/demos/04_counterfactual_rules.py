"""A compact end-to-end run on a small synthetic corpus: train the explainee
classifier, mine significant subgraphs from the rejected graphs, learn
counterfactual rewrites, greedily pick a budgeted rule set, and score it."""

from gce import (
    CsaConfig,
    MinerConfig,
    TrainConfig,
    evaluate_global,
    generate_synthetic,
    greedy_select,
    mine_frequent,
    predict,
    select_significant,
    train,
    train_csa,
)
from gce.summarize import coverage

dataset = generate_synthetic(count=300, seed=1)
model, report = train(dataset, TrainConfig(epochs=500, learning_rate=0.01, seed=1))
print(f"classifier test accuracy: {report['test_accuracy']:.3f}")

rejected_ids = [i for i, g in enumerate(dataset.graphs) if predict(model, g) == 0]
rejected = dataset.subset(rejected_ids)
print(f"classifier rejects {len(rejected)} of {len(dataset)} graphs")

patterns = mine_frequent(rejected, MinerConfig(tau=0.3, min_nodes=4, max_nodes=5))
significant = select_significant(patterns, 6)
print(f"significant patterns: {len(significant)}")
for p in significant[:3]:
    print(f"  {p.graph.node_count}-node pattern, appearance rate {p.appearance_rate:.2f}")

candidates = train_csa(
    significant,
    rejected,
    model,
    CsaConfig(alpha=10.0, delta=2, epochs=20, learning_rate=0.01, seed=1),
)
for i, cand in enumerate(candidates[:3]):
    print(
        f"rule {i}: source edges {cand.source.edges()} -> "
        f"counterfactual edges {cand.counterfactual.edges()}"
    )

chosen, trace = greedy_select(candidates, 3, rejected, model)
for step in trace:
    print(f"round {step['round']}: +{step['marginal_covered']} hosts")

result = evaluate_global(chosen, rejected, model)
print(
    f"coverage {result.coverage_pct:.2f}%  proximity "
    f"{result.proximity}  comprehensibility {result.comprehensibility}"
)
