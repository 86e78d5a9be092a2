"""The explainee black box: a small message-passing graph classifier.

Two message-passing layers (hidden width 32), coordinatewise max pooling,
and a linear head over two classes.  The convolutional variant uses a
symmetric-normalized adjacency with self-loops; the attention variant (used
when edge attributes exist) multiplies attention coefficients by the soft
edge weight so gradients reach adjacency entries.  Forward passes accept
soft graphs whose adjacency entries lie in [0, 1]; hard graphs are the 0/1
special case.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from gce import autodiff as ad
from gce.autodiff import Var, const
from gce.graphs import Graph, GraphDataset

__all__ = [
    "SoftGraph",
    "ClassifierModel",
    "TrainConfig",
    "init_model",
    "forward",
    "predict",
    "train",
    "gradient_check",
    "save_model",
    "load_model",
]

HIDDEN = 32
CHECKPOINT_FORMAT = "gce-gnn-v1"
LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class SoftGraph:
    """Relaxed graph: adjacency in [0,1], row-stochastic-ish attribute rows.

    edge_attrs is a dense (n, n, m) tensor (symmetric in the first two axes)
    or None when the vocabulary has no edge labels.
    """

    adjacency: np.ndarray
    node_attrs: np.ndarray
    edge_attrs: np.ndarray | None = None

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]


@dataclass(frozen=True)
class ClassifierModel:
    """Parameters of the explainee classifier.  desired class is always 1."""

    architecture: str
    node_attr_dim: int
    edge_attr_dim: int
    params: dict[str, np.ndarray]
    hidden: int = HIDDEN

    desired_class = 1

    def param_names(self) -> list[str]:
        return list(self.params)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    optimizer: str = "adam"
    split: tuple[float, float, float] = (0.5, 0.25, 0.25)
    seed: int = 0
    architecture: str = "auto"
    restarts: int = 1
    finetune_epochs: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError("optimizer must be sgd or adam")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.architecture not in ("auto", "gcn", "gat"):
            raise ValueError("architecture must be auto, gcn, or gat")
        if self.restarts < 1 or self.finetune_epochs < 0:
            raise ValueError("restarts must be >= 1 and finetune_epochs >= 0")


def init_model(architecture: str, node_attr_dim: int, edge_attr_dim: int, seed: int) -> ClassifierModel:
    """Seeded uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization."""
    if architecture not in ("gcn", "gat"):
        raise ValueError("architecture must be gcn or gat")
    rng = np.random.default_rng(seed)

    def uniform(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params: dict[str, np.ndarray] = {}
    dims = [(node_attr_dim, HIDDEN), (HIDDEN, HIDDEN)]
    bias_spread = {1: 2.0, 2: 1.0}
    for layer, (fin, fout) in enumerate(dims, start=1):
        params[f"W{layer}"] = uniform(fin, (fin, fout))
        # Per-layer biases: with one-hot inputs the pre-activation field is
        # strictly positive and narrow, so biasless relu layers degenerate to
        # linear rescalings.  The spread places relu knots across the field.
        params[f"b{layer}"] = rng.uniform(-bias_spread[layer], bias_spread[layer], fout)
        if architecture == "gat":
            params[f"a_src{layer}"] = uniform(fout, (fout, 1))
            params[f"a_dst{layer}"] = uniform(fout, (fout, 1))
            if edge_attr_dim > 0:
                params[f"a_edge{layer}"] = uniform(fout, (fout, 1))
    if architecture == "gat" and edge_attr_dim > 0:
        params["We"] = uniform(edge_attr_dim, (edge_attr_dim, HIDDEN))
    params["Wh"] = uniform(HIDDEN, (HIDDEN, 2))
    params["bh"] = uniform(HIDDEN, (2,))
    return ClassifierModel(architecture, node_attr_dim, edge_attr_dim, params)


# ---------------------------------------------------------------------------
# Forward passes.  The taped path drives gradients; the plain numpy path is
# the fast route for prediction.  They must agree (tested).
# ---------------------------------------------------------------------------


def _expand(v: Var, trailing: bool) -> Var:
    shape = v.value.shape
    return ad.reshape(v, shape + (1,)) if trailing else ad.reshape(v, shape[:-1] + (1, shape[-1]))


def _gcn_logits_taped(p: dict[str, Var], A: Var, X: Var, mask: np.ndarray) -> Var:
    n = A.value.shape[-1]
    eye = np.eye(n)
    loops = eye * mask[..., None, :]
    A_hat = A + const(loops)
    deg = ad.vsum(A_hat, axis=-1) + const(1.0 - mask)
    dinv = ad.power(deg, -0.5)
    A_norm = A_hat * _expand(dinv, True) * _expand(dinv, False)
    keep = const(mask[..., None])  # biases must not leak onto padded rows
    h = ad.relu(A_norm @ (X @ p["W1"]) + p["b1"]) * keep
    h = ad.relu(A_norm @ (h @ p["W2"]) + p["b2"]) * keep
    pooled = ad.amax(h, axis=h.value.ndim - 2)
    return pooled @ p["Wh"] + p["bh"]


def _gat_layer_taped(
    p: dict[str, Var], layer: int, A: Var, H: Var, E: Var | None, eye: np.ndarray,
    keep: Var,
) -> Var:
    Hw = H @ p[f"W{layer}"]
    s_src = Hw @ p[f"a_src{layer}"]
    s_dst = Hw @ p[f"a_dst{layer}"]
    scores = s_src + ad.swapaxes(s_dst, -1, -2)
    if E is not None:
        shape = E.value.shape
        flat = ad.reshape(E, shape[:-3] + (shape[-3] * shape[-2], shape[-1]))
        eterm = (flat @ p["We"]) @ p[f"a_edge{layer}"]
        scores = scores + ad.reshape(eterm, shape[:-1])
    scores = ad.leaky_relu(scores, LEAKY_SLOPE)
    weights = (A + const(eye)) * ad.exp(scores)
    alpha = weights / ad.vsum(weights, axis=-1, keepdims=True)
    return ad.relu(alpha @ Hw + p[f"b{layer}"]) * keep


def _gat_logits_taped(p: dict[str, Var], A: Var, X: Var, E: Var | None, mask: np.ndarray) -> Var:
    n = A.value.shape[-1]
    eye = np.eye(n)
    keep = const(mask[..., None])
    h = _gat_layer_taped(p, 1, A, X, E, eye, keep)
    h = _gat_layer_taped(p, 2, A, h, E, eye, keep)
    pooled = ad.amax(h, axis=h.value.ndim - 2)
    return pooled @ p["Wh"] + p["bh"]


def _logits_taped(
    model: ClassifierModel,
    p: dict[str, Var],
    A: Var,
    X: Var,
    E: Var | None,
    mask: np.ndarray,
) -> Var:
    if model.architecture == "gcn":
        return _gcn_logits_taped(p, A, X, mask)
    return _gat_logits_taped(p, A, X, E, mask)


def _logits_np(
    model: ClassifierModel,
    params: dict[str, np.ndarray],
    A: np.ndarray,
    X: np.ndarray,
    E: np.ndarray | None,
    mask: np.ndarray,
) -> np.ndarray:
    p = params
    if model.architecture == "gcn":
        n = A.shape[-1]
        A_hat = A + np.eye(n) * mask[..., None, :]
        deg = A_hat.sum(axis=-1) + (1.0 - mask)
        dinv = deg**-0.5
        A_norm = A_hat * dinv[..., :, None] * dinv[..., None, :]
        keep = mask[..., None]
        h = np.maximum(A_norm @ (X @ p["W1"]) + p["b1"], 0.0) * keep
        h = np.maximum(A_norm @ (h @ p["W2"]) + p["b2"], 0.0) * keep
    else:
        n = A.shape[-1]
        eye = np.eye(n)
        h = X
        for layer in (1, 2):
            Hw = h @ p[f"W{layer}"]
            scores = Hw @ p[f"a_src{layer}"] + np.swapaxes(Hw @ p[f"a_dst{layer}"], -1, -2)
            if E is not None:
                shape = E.shape
                flat = E.reshape(shape[:-3] + (shape[-3] * shape[-2], shape[-1]))
                scores = scores + ((flat @ p["We"]) @ p[f"a_edge{layer}"]).reshape(shape[:-1])
            scores = np.where(scores > 0, scores, LEAKY_SLOPE * scores)
            weights = (A + eye) * np.exp(scores)
            alpha = weights / weights.sum(axis=-1, keepdims=True)
            h = np.maximum(alpha @ Hw + p[f"b{layer}"], 0.0) * mask[..., None]
    pooled = h.max(axis=-2)
    return pooled @ p["Wh"] + p["bh"]


def _dense_inputs(graph: Graph | SoftGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    if isinstance(graph, SoftGraph):
        E = graph.edge_attrs
        return (
            np.asarray(graph.adjacency, dtype=float),
            np.asarray(graph.node_attrs, dtype=float),
            None if E is None else np.asarray(E, dtype=float),
        )
    n = graph.node_count
    A = graph.adjacency.astype(float)
    X = graph.node_attrs.astype(float)
    E = None
    if graph.edge_attr_dim > 0:
        E = np.zeros((n, n, graph.edge_attr_dim))
        for (i, j), vec in graph.edge_attrs.items():
            E[i, j] = E[j, i] = vec
    return A, X, E


def _check_dims(model: ClassifierModel, X: np.ndarray, E: np.ndarray | None) -> None:
    if X.shape[-1] != model.node_attr_dim:
        raise ValueError(
            f"node attribute dimension {X.shape[-1]} does not match model "
            f"({model.node_attr_dim})"
        )
    if model.edge_attr_dim > 0 and E is not None and E.shape[-1] != model.edge_attr_dim:
        raise ValueError("edge attribute dimension does not match model")


def forward(model: ClassifierModel, graph: Graph | SoftGraph) -> np.ndarray:
    """Logits (class 0, class 1) for a hard or soft graph."""
    A, X, E = _dense_inputs(graph)
    _check_dims(model, X, E)
    if model.architecture == "gat" and model.edge_attr_dim > 0 and E is None:
        E = np.zeros(A.shape + (model.edge_attr_dim,))
    mask = np.ones(A.shape[-1])
    return _logits_np(model, model.params, A, X, E, mask)


def predict(model: ClassifierModel, graph: Graph | SoftGraph) -> int:
    """Argmax class; exact ties resolve to the undesired class 0."""
    logits = forward(model, graph)
    return 0 if logits[0] >= logits[1] else 1


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _pad_dataset(
    graphs: list[Graph], l: int, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray]:
    n_max = max(g.node_count for g in graphs)
    B = len(graphs)
    A = np.zeros((B, n_max, n_max))
    X = np.zeros((B, n_max, l))
    E = np.zeros((B, n_max, n_max, m)) if m > 0 else None
    mask = np.zeros((B, n_max))
    for b, g in enumerate(graphs):
        n = g.node_count
        A[b, :n, :n] = g.adjacency
        X[b, :n] = g.node_attrs
        mask[b, :n] = 1.0
        if m > 0:
            for (i, j), vec in g.edge_attrs.items():
                E[b, i, j] = E[b, j, i] = vec
    return A, X, E, mask


class _Optimizer:
    """SGD or Adam over named parameter arrays, with torch-style L2 decay."""

    def __init__(self, kind: str, lr: float, weight_decay: float):
        self.kind = kind
        self.lr = lr
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, value in params.items():
            g = grads[name] + self.weight_decay * value
            if self.kind == "sgd":
                params[name] = value - self.lr * g
                continue
            if name not in self.m:
                self.m[name] = np.zeros_like(value)
                self.v[name] = np.zeros_like(value)
            self.m[name] = 0.9 * self.m[name] + 0.1 * g
            self.v[name] = 0.999 * self.v[name] + 0.001 * g * g
            mhat = self.m[name] / (1.0 - 0.9**self.t)
            vhat = self.v[name] / (1.0 - 0.999**self.t)
            params[name] = value - self.lr * mhat / (np.sqrt(vhat) + 1e-8)


def _accuracy(model: ClassifierModel, params, A, X, E, mask, y) -> float:
    logits = _logits_np(model, params, A, X, E, mask)
    pred = (logits[:, 1] > logits[:, 0]).astype(int)
    return float((pred == y).mean())


def train(dataset: GraphDataset, config: TrainConfig) -> tuple[ClassifierModel, dict]:
    """Cross-entropy training with a seeded split.

    Runs `restarts` independently initialized optimization runs of `epochs`
    full-batch steps each, snapshotting the best-validation parameters seen,
    then fine-tunes the snapshot for `finetune_epochs` at a fifth of the
    learning rate.  Returns the best-validation parameters and an accuracy
    report.  Deterministic given the seed.
    """
    n = len(dataset)
    arch = config.architecture
    if arch == "auto":
        arch = "gat" if dataset.edge_attr_dim > 0 else "gcn"
    rng = np.random.default_rng(config.seed)
    order = rng.permutation(n)
    n_tr = int(round(n * config.split[0]))
    n_val = int(round(n * config.split[1]))
    n_te = n - n_tr - n_val
    if n_tr < 1 or n_val < 1 or n_te < 1:
        raise ValueError("split produces an empty train/val/test part")
    idx_tr = order[:n_tr]
    idx_val = order[n_tr : n_tr + n_val]
    idx_te = order[n_tr + n_val :]

    l, m = dataset.node_attr_dim, dataset.edge_attr_dim
    y = np.asarray(dataset.labels)
    A, X, E, mask = _pad_dataset(list(dataset.graphs), max(l, 1), m)

    def batch(indices):
        return (
            A[indices],
            X[indices],
            E[indices] if E is not None else None,
            mask[indices],
            y[indices],
        )

    A_tr, X_tr, E_tr, mask_tr, y_tr = batch(idx_tr)
    val_batch = batch(idx_val)
    test_batch = batch(idx_te)
    onehot_tr = np.eye(2)[y_tr]
    model = init_model(arch, max(l, 1), m, config.seed)
    chunk = 512

    def train_loss_and_grads(params):
        grads = {k: np.zeros_like(v) for k, v in params.items()}
        loss_sum = 0.0
        for start in range(0, n_tr, chunk):
            sl = slice(start, min(start + chunk, n_tr))
            p_vars = {k: Var(v) for k, v in params.items()}
            logits = _logits_taped(
                model,
                p_vars,
                const(A_tr[sl]),
                const(X_tr[sl]),
                const(E_tr[sl]) if E_tr is not None else None,
                mask_tr[sl],
            )
            ce = -ad.vsum(ad.log_softmax(logits, axis=-1) * const(onehot_tr[sl]))
            ce.backward()
            loss_sum += float(ce.value)
            for k, v in p_vars.items():
                if v.grad is not None:
                    grads[k] += v.grad
        for k in grads:
            grads[k] /= n_tr
        return loss_sum / n_tr, grads

    best_val = -1.0
    best_params = None
    initial_loss = None
    final_loss = None

    def optimize(params, lr, epochs):
        nonlocal best_val, best_params, initial_loss, final_loss
        optimizer = _Optimizer(config.optimizer, lr, config.weight_decay)
        for _epoch in range(epochs):
            loss, grads = train_loss_and_grads(params)
            if initial_loss is None:
                initial_loss = loss
            final_loss = loss
            optimizer.step(params, grads)
            val_acc = _accuracy(model, params, *val_batch)
            if val_acc > best_val:
                best_val = val_acc
                best_params = {k: v.copy() for k, v in params.items()}

    for restart in range(config.restarts):
        start_model = init_model(arch, max(l, 1), m, [config.seed, restart])
        params = {k: v.copy() for k, v in start_model.params.items()}
        if best_params is None:
            best_params = {k: v.copy() for k, v in params.items()}
        optimize(params, config.learning_rate, config.epochs)
    if config.finetune_epochs > 0:
        params = {k: v.copy() for k, v in best_params.items()}
        optimize(params, config.learning_rate / 5.0, config.finetune_epochs)

    trained = ClassifierModel(arch, max(l, 1), m, best_params)
    report = {
        "architecture": arch,
        "train_accuracy": _accuracy(trained, best_params, A_tr, X_tr, E_tr, mask_tr, y_tr),
        "val_accuracy": _accuracy(trained, best_params, *val_batch),
        "test_accuracy": _accuracy(trained, best_params, *test_batch),
        "initial_loss": initial_loss,
        "final_loss": final_loss,
        "epochs": config.epochs,
    }
    return trained, report


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def _rel_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-4)
    return float(np.max(np.abs(a - b) / denom))


def gradient_check(model: ClassifierModel, graph: Graph | SoftGraph, epsilon: float = 1e-5) -> float:
    """Max relative error between the analytic gradient of the class-1 logit
    w.r.t. every soft input entry and central finite differences.

    Near-zero gradients are compared with an absolute floor of 1e-4 in the
    denominator, so entries where both sides vanish pass.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    A0, X0, E0 = _dense_inputs(graph)
    _check_dims(model, X0, E0)
    if model.architecture == "gat" and model.edge_attr_dim > 0 and E0 is None:
        E0 = np.zeros(A0.shape + (model.edge_attr_dim,))
    mask = np.ones(A0.shape[-1])
    p_vars = {k: const(v) for k, v in model.params.items()}

    A_var, X_var = Var(A0.copy()), Var(X0.copy())
    E_var = Var(E0.copy()) if E0 is not None else None
    logits = _logits_taped(model, p_vars, A_var, X_var, E_var, mask)
    logits[1].backward()
    analytic = [A_var.grad, X_var.grad] + ([E_var.grad] if E_var is not None else [])
    analytic = [np.zeros_like(A0) if g is None else g for g in analytic]

    def value(A, X, E):
        return float(_logits_np(model, model.params, A, X, E, mask)[1])

    worst = 0.0
    arrays = [A0, X0] + ([E0] if E0 is not None else [])
    for arr, grad in zip(arrays, analytic):
        flat = arr.reshape(-1)
        fd = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            hi = value(A0, X0, E0)
            flat[i] = orig - epsilon
            lo = value(A0, X0, E0)
            flat[i] = orig
            fd[i] = (hi - lo) / (2 * epsilon)
        worst = max(worst, _rel_error(grad.reshape(-1), fd))
    return worst


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_model(model: ClassifierModel, path: str) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "architecture": model.architecture,
        "node_attr_dim": model.node_attr_dim,
        "edge_attr_dim": model.edge_attr_dim,
        "hidden": model.hidden,
        "params": {
            k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()}
            for k, v in model.params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path: str) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {payload.get('format')!r}")
    params = {
        k: np.asarray(rec["data"], dtype=float).reshape(rec["shape"])
        for k, rec in payload["params"].items()
    }
    return ClassifierModel(
        payload["architecture"],
        payload["node_attr_dim"],
        payload["edge_attr_dim"],
        params,
        payload["hidden"],
    )
