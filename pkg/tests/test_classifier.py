import numpy as np
import pytest

from gce.classifier import (
    ClassifierModel,
    SoftGraph,
    TrainConfig,
    forward,
    gradient_check,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from gce.graphs import GraphDataset, generate_synthetic, graph_from_edges
from oracles import random_labeled_graph


def permuted_copy(g, perm):
    n = g.node_count
    edges = [(min(perm[i], perm[j]), max(perm[i], perm[j])) for i, j in g.edges()]
    labels = [0] * n
    for v in range(n):
        labels[perm[v]] = int(g.node_labels()[v])
    elabels = [g.edge_label(i, j) for i, j in g.edges()] if g.edge_attr_dim else None
    return graph_from_edges(n, edges, labels, g.node_attr_dim, elabels, g.edge_attr_dim)


def test_forward_permutation_invariance_gcn_and_gat():
    rng = np.random.default_rng(0)
    gcn = init_model("gcn", 2, 0, 1)
    gat = init_model("gat", 2, 2, 2)
    worst = 0.0
    for _ in range(100):
        g = random_labeled_graph(rng, int(rng.integers(2, 9)), 2, 0.5, 2)
        g_plain = graph_from_edges(
            g.node_count, g.edges(), g.node_labels().tolist(), 2
        )
        perm = rng.permutation(g.node_count).tolist()
        h_plain = permuted_copy(g_plain, perm)
        h = permuted_copy(g, perm)
        worst = max(worst, np.abs(forward(gcn, g_plain) - forward(gcn, h_plain)).max())
        worst = max(worst, np.abs(forward(gat, g) - forward(gat, h)).max())
    assert worst <= 1e-9


def test_single_node_forward_hand_trace():
    model = init_model("gcn", 3, 0, 5)
    g = graph_from_edges(1, [], [1], 3)
    p = model.params
    h1 = np.maximum(p["W1"][1] + p["b1"], 0.0)
    h2 = np.maximum(h1 @ p["W2"] + p["b2"], 0.0)
    expected = h2 @ p["Wh"] + p["bh"]
    np.testing.assert_allclose(forward(model, g), expected, atol=1e-12)


def test_soft_graph_binary_entries_equal_hard_forward():
    rng = np.random.default_rng(3)
    model = init_model("gcn", 2, 0, 4)
    for _ in range(10):
        g = random_labeled_graph(rng, 6, 2, 0.5)
        soft = SoftGraph(g.adjacency.astype(float), g.node_attrs.astype(float), None)
        np.testing.assert_allclose(forward(model, g), forward(model, soft), atol=1e-12)


def test_predict_tie_breaks_to_zero():
    model = init_model("gcn", 1, 0, 0)
    params = dict(model.params)
    params["Wh"] = np.zeros((32, 2))
    params["bh"] = np.array([0.0, 0.0])
    tied = ClassifierModel("gcn", 1, 0, params)
    g = graph_from_edges(3, [(0, 1)], [0, 0, 0], 1)
    assert np.allclose(forward(tied, g)[0], forward(tied, g)[1])
    assert predict(tied, g) == 0
    params2 = dict(params)
    params2["bh"] = np.array([2.0, -1.0])
    assert predict(ClassifierModel("gcn", 1, 0, params2), g) == 0
    params3 = dict(params)
    params3["bh"] = np.array([-1.0, 2.0])
    assert predict(ClassifierModel("gcn", 1, 0, params3), g) == 1


def test_dimension_mismatch_raises():
    model = init_model("gcn", 2, 0, 0)
    g = graph_from_edges(3, [(0, 1)], [0, 0, 0], 1)
    with pytest.raises(ValueError, match="dimension"):
        forward(model, g)


def test_gradient_check_gcn_and_gat():
    rng = np.random.default_rng(9)
    worst = 0.0
    for arch, m in (("gcn", 0), ("gat", 2)):
        model = init_model(arch, 2, m, 11)
        for _ in range(5):
            n = 6
            A = rng.random((n, n)) * 0.8
            A = np.triu(A, 1)
            A = A + A.T
            X = rng.dirichlet(np.ones(2), size=n)
            E = rng.dirichlet(np.ones(2), size=(n, n)) if m else None
            if E is not None:
                E = (E + np.swapaxes(E, 0, 1)) / 2
            soft = SoftGraph(A, X, E)
            worst = max(worst, gradient_check(model, soft, 1e-5))
    assert worst <= 1e-4


def test_gradient_check_zero_gradient_entries():
    # an isolated node contributes near-zero gradients; the check must still
    # pass (floored relative error).  Labels break the 0/2 leaf symmetry so
    # the max pool has no exact ties.
    model = init_model("gcn", 2, 0, 2)
    g = graph_from_edges(4, [(0, 1), (1, 2)], [0, 1, 1, 0], 2)
    assert gradient_check(model, g, 1e-5) <= 1e-4


def test_train_identical_graphs_reaches_full_accuracy():
    g = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)], [0] * 4, 1)
    ds = GraphDataset((g,) * 12, (1,) * 12, ("0",), (), "const")
    model, report = train(ds, TrainConfig(epochs=40, learning_rate=0.05, seed=0))
    assert report["train_accuracy"] == 1.0
    assert predict(model, g) == 1


def test_train_deterministic_same_seed():
    ds = generate_synthetic(60, 5)
    cfg = TrainConfig(epochs=8, learning_rate=0.01, seed=3)
    m1, r1 = train(ds, cfg)
    m2, r2 = train(ds, cfg)
    assert r1 == r2
    for k in m1.params:
        assert np.array_equal(m1.params[k], m2.params[k])


def test_train_loss_decreases():
    ds = generate_synthetic(200, 1)
    _, report = train(ds, TrainConfig(epochs=30, learning_rate=0.01, seed=0))
    assert report["final_loss"] < report["initial_loss"]


def test_train_empty_split_rejected():
    ds = generate_synthetic(2, 0)
    with pytest.raises(ValueError, match="empty"):
        train(ds, TrainConfig(epochs=1, split=(0.9, 0.05, 0.05)))


def test_train_gat_on_edge_labeled_data():
    rng = np.random.default_rng(7)
    graphs, labels = [], []
    for i in range(40):
        g = random_labeled_graph(rng, 6, 2, 0.5, 2)
        graphs.append(g)
        labels.append(i % 2)
    ds = GraphDataset(tuple(graphs), tuple(labels), ("0", "1"), ("0", "1"), "rand")
    model, report = train(ds, TrainConfig(epochs=5, learning_rate=0.01, seed=0))
    assert report["architecture"] == "gat"
    assert model.architecture == "gat"
    g = graphs[0]
    assert predict(model, g) in (0, 1)


def test_checkpoint_round_trip(tmp_path):
    model = init_model("gat", 3, 2, 8)
    path = tmp_path / "gnn.json"
    save_model(model, str(path))
    back = load_model(str(path))
    assert back.architecture == model.architecture
    assert back.node_attr_dim == model.node_attr_dim
    assert back.edge_attr_dim == model.edge_attr_dim
    for k in model.params:
        assert np.array_equal(back.params[k], model.params[k])
    g = random_labeled_graph(np.random.default_rng(0), 5, 3, 0.5, 2)
    np.testing.assert_allclose(forward(model, g), forward(back, g), atol=0)


def test_checkpoint_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "gce-gnn-v0", "params": {}}')
    with pytest.raises(ValueError, match="format"):
        load_model(str(path))


def test_checkpoint_bytes_deterministic(tmp_path):
    ds = generate_synthetic(40, 2)
    cfg = TrainConfig(epochs=4, learning_rate=0.01, seed=9)
    m1, _ = train(ds, cfg)
    m2, _ = train(ds, cfg)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(m1, str(p1))
    save_model(m2, str(p2))
    assert p1.read_bytes() == p2.read_bytes()
