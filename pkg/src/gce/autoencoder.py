"""Counterfactual subgraph autoencoder.

Per mined pattern, a small conditional VAE: a message-passing encoder maps
the pattern to a latent Gaussian, and a dense decoder (conditioned on the
desired class) emits a probabilistic counterfactual subgraph over the
pattern's nodes plus a little extra node capacity.  Training minimizes a
reconstruction-style distance to the source pattern, the classifier's
negative log-likelihood of the desired class on soft composites with the
host graphs, and a KL pull of the latent posterior toward the unit
Gaussian.  Discretization thresholds the soft outputs into a concrete
rewrite rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from gce import autodiff as ad
from gce.autodiff import Var, const
from gce.classifier import ClassifierModel, SoftGraph, _logits_taped
from gce.graphs import Graph, GraphDataset, graph_from_edges
from gce.matching import Occurrence, find_occurrences
from gce.mining import FrequentPattern, graph_from_dfs_code, minimum_dfs_code

__all__ = [
    "CsaConfig",
    "CsaModel",
    "ProbabilisticSubgraph",
    "CsmCandidate",
    "init_csa_model",
    "encode",
    "sample_latent",
    "decode",
    "compose_soft",
    "loss",
    "train_csa",
    "discretize",
    "save_candidates",
    "load_candidates",
]

CANDIDATE_FORMAT = "gce-candidates-v1"
LATENT_DIM = 64
MINIBATCH = 32


@dataclass(frozen=True)
class CsaConfig:
    """Hyperparameters of one autoencoder training run."""

    alpha: float = 10.0
    delta: int = 2
    beta: float = 1.0
    gamma: float = 1.0
    epochs: int = 100
    learning_rate: float = 0.01
    dropout: float = 0.5
    encoder_hidden: int = 32
    decoder_hidden: int = 128
    latent_dim: int = LATENT_DIM
    seed: int = 0

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must be in [0, 1)")
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be nonnegative")


@dataclass(frozen=True)
class CsaModel:
    """Per-pattern encoder/decoder parameters and shape bookkeeping."""

    params: dict[str, np.ndarray]
    base_node_count: int
    extra_capacity: int
    node_attr_dim: int
    edge_attr_dim: int
    config: CsaConfig

    @property
    def capacity(self) -> int:
        return self.base_node_count + self.extra_capacity


@dataclass(frozen=True)
class ProbabilisticSubgraph:
    """Soft counterfactual subgraph over base nodes plus extra capacity."""

    soft_adjacency: np.ndarray
    soft_node_attrs: np.ndarray
    soft_edge_attrs: np.ndarray | None
    base_node_count: int
    extra_capacity: int


@dataclass(frozen=True)
class CsmCandidate:
    """A concrete rewrite rule: source pattern -> counterfactual subgraph."""

    source: Graph
    counterfactual: Graph
    correspondence: tuple[int, ...]
    train_stats: dict


def init_csa_model(
    source: Graph, config: CsaConfig, rng: np.random.Generator
) -> CsaModel:
    """Seeded uniform(+-1/sqrt(fan_in)) initialization of all parameters."""
    l = source.node_attr_dim
    m = source.edge_attr_dim
    hid = config.encoder_hidden
    lat = config.latent_dim
    n_max = source.node_count + config.delta
    slots = n_max * (n_max - 1) // 2
    out_dim = slots + n_max * l + (slots * m if m > 0 else 0)

    def uniform(fan_in: int, shape) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    params = {
        "enc_W1": uniform(l, (l, hid)),
        "enc_b1": rng.uniform(-1.0, 1.0, hid),
        "enc_W2": uniform(hid, (hid, hid)),
        "enc_b2": rng.uniform(-1.0, 1.0, hid),
        "mu_W": uniform(hid, (hid, lat)),
        "mu_b": np.zeros(lat),
        "ls_W": uniform(hid, (hid, lat)),
        "ls_b": np.zeros(lat),
        "dec_W1": uniform(lat + 2, (lat + 2, config.decoder_hidden)),
        "dec_b1": uniform(lat + 2, (config.decoder_hidden,)),
        "dec_W2": uniform(config.decoder_hidden, (config.decoder_hidden, out_dim)),
        "dec_b2": uniform(config.decoder_hidden, (out_dim,)),
    }
    if m > 0:
        params["enc_We"] = uniform(m, (m, hid))
    return CsaModel(params, source.node_count, config.delta, l, m, config)


# ---------------------------------------------------------------------------
# Taped building blocks (shared by training and the public numpy surface)
# ---------------------------------------------------------------------------


def _encode_taped(
    model: CsaModel,
    p: dict[str, Var],
    g: Graph,
    dropout_masks: tuple[np.ndarray, np.ndarray] | None,
) -> tuple[Var, Var]:
    n = g.node_count
    A = g.adjacency.astype(float)
    A_hat = A + np.eye(n)
    deg = A_hat.sum(axis=1)
    dinv = deg**-0.5
    A_norm = const(A_hat * dinv[:, None] * dinv[None, :])
    X = const(g.node_attrs.astype(float))

    pre1 = A_norm @ (X @ p["enc_W1"])
    if model.edge_attr_dim > 0:
        E = np.zeros((n, n, model.edge_attr_dim))
        for (i, j), vec in g.edge_attrs.items():
            E[i, j] = E[j, i] = vec
        weights = (A_hat * dinv[:, None] * dinv[None, :])[..., None]
        pre1 = pre1 + ad.vsum((const(E) @ p["enc_We"]) * const(weights), axis=1)
    h = ad.relu(pre1 + p["enc_b1"])
    if dropout_masks is not None:
        h = h * const(dropout_masks[0])
    h = ad.relu(A_norm @ (h @ p["enc_W2"]) + p["enc_b2"])
    if dropout_masks is not None:
        h = h * const(dropout_masks[1])
    pooled = ad.vmean(h, axis=0)
    pooled = ad.reshape(pooled, (1, pooled.value.shape[0]))
    mu = pooled @ p["mu_W"] + p["mu_b"]
    log_sigma = pooled @ p["ls_W"] + p["ls_b"]
    return mu, log_sigma


def _decode_taped(
    model: CsaModel, p: dict[str, Var], z: Var, y_star: int
) -> tuple[Var, Var, Var | None]:
    """Soft outputs as (upper-triangle adjacency logits, node-attr logits,
    edge-attr logits); nonlinearities are applied by the consumers."""
    n_max = model.capacity
    l, m = model.node_attr_dim, model.edge_attr_dim
    slots = n_max * (n_max - 1) // 2
    y = np.zeros(2)
    y[y_star] = 1.0
    inp = ad.concat([z, const(y.reshape(1, 2))], axis=1)
    h = ad.relu(inp @ p["dec_W1"] + p["dec_b1"])
    out = h @ p["dec_W2"] + p["dec_b2"]
    adj_logits = ad.reshape(out[:, :slots], (slots,))
    node_logits = ad.reshape(out[:, slots : slots + n_max * l], (n_max, l))
    edge_logits = None
    if m > 0:
        edge_logits = ad.reshape(out[:, slots + n_max * l :], (slots, m))
    return adj_logits, node_logits, edge_logits


def _soft_outputs(
    model: CsaModel, adj_logits: Var, node_logits: Var, edge_logits: Var | None
) -> tuple[Var, Var, Var | None]:
    n_max = model.capacity
    soft_adj = ad.ut_to_symmetric(ad.sigmoid(adj_logits), n_max)
    soft_nodes = ad.softmax(node_logits, axis=1)
    soft_edges = None
    if edge_logits is not None:
        soft_edges = ad.ut_to_symmetric3(
            ad.softmax(edge_logits, axis=1), n_max, model.edge_attr_dim
        )
    return soft_adj, soft_nodes, soft_edges


def _compose_taped(
    host: Graph,
    occ: Occurrence,
    soft_adj: Var,
    soft_nodes: Var,
    soft_edges: Var | None,
    base_node_count: int,
    capacity: int,
) -> tuple[Var, Var, Var | None, int]:
    """Soft composite graph: host with the occurrence block replaced by the
    probabilistic subgraph, extra slots appended, boundary edges untouched."""
    n_h = host.node_count
    n_extra = capacity - base_node_count
    n_c = n_h + n_extra
    if max(occ.mapping) >= n_h:
        raise ValueError("occurrence image exceeds host size")
    cpos = np.array(list(occ.mapping) + [n_h + t for t in range(n_extra)])

    A_host = np.zeros((n_c, n_c))
    A_host[:n_h, :n_h] = host.adjacency
    block = np.zeros((n_c, n_c))
    block[np.ix_(cpos, cpos)] = 1.0
    np.fill_diagonal(block, 0.0)
    A = const(A_host * (1.0 - block)) + ad.embed_block(soft_adj, cpos, cpos, (n_c, n_c))

    l = host.node_attr_dim
    X_host = np.zeros((n_c, l))
    X_host[:n_h] = host.node_attrs
    row_mask = np.zeros((n_c, 1))
    row_mask[cpos] = 1.0
    X = const(X_host * (1.0 - row_mask)) + ad.embed_rows(soft_nodes, cpos, (n_c, l))

    E = None
    if soft_edges is not None:
        m = host.edge_attr_dim
        E_host = np.zeros((n_c, n_c, m))
        for (i, j), vec in host.edge_attrs.items():
            E_host[i, j] = E_host[j, i] = vec
        E = const(E_host * (1.0 - block[..., None])) + ad.embed_block3(
            soft_edges, cpos, cpos, (n_c, n_c, m)
        )
    return A, X, E, n_c


def _distance_terms(
    model: CsaModel,
    adj_logits: Var,
    node_logits: Var,
    edge_logits: Var | None,
    g: Graph,
) -> Var:
    """Training distance to the source pattern: adjacency BCE over the padded
    upper triangle plus weighted cross-entropy on attribute rows."""
    n_max, n_g = model.capacity, model.base_node_count
    cfg = model.config
    iu = np.triu_indices(n_max, k=1)
    A_target = np.zeros((n_max, n_max))
    A_target[:n_g, :n_g] = g.adjacency
    d = ad.bce_with_logits(adj_logits, A_target[iu])

    X_target = np.zeros((n_max, model.node_attr_dim))
    X_target[:n_g] = g.node_attrs
    node_ce = -ad.vsum(ad.log_softmax(node_logits, axis=1) * const(X_target))
    d = d + cfg.beta * node_ce

    if edge_logits is not None:
        m = model.edge_attr_dim
        E_target = np.zeros((n_max, n_max, m))
        for (i, j), vec in g.edge_attrs.items():
            E_target[i, j] = E_target[j, i] = vec
        edge_ce = -ad.vsum(ad.log_softmax(edge_logits, axis=1) * const(E_target[iu]))
        d = d + cfg.gamma * edge_ce
    return d


def _kl_term(mu: Var, log_sigma: Var) -> Var:
    return 0.5 * ad.vsum(
        mu * mu + ad.exp(2.0 * log_sigma) - 1.0 - 2.0 * log_sigma
    )


def _classifier_nll(
    classifier: ClassifierModel,
    composites: list[tuple[Var, Var, Var | None, int]],
    y_star: int,
) -> Var:
    """Mean NLL of the desired class over soft composites, batched by size."""
    n_pad = max(nc for _, _, _, nc in composites)
    A_parts, X_parts, E_parts, mask_rows = [], [], [], []
    for A, X, E, nc in composites:
        pad = n_pad - nc
        if pad > 0:
            A = ad.embed_block(A, np.arange(nc), np.arange(nc), (n_pad, n_pad))
            X = ad.embed_rows(X, np.arange(nc), (n_pad, X.value.shape[1]))
            if E is not None:
                E = ad.embed_block3(E, np.arange(nc), np.arange(nc), (n_pad, n_pad, E.value.shape[2]))
        A_parts.append(A)
        X_parts.append(X)
        if E is not None:
            E_parts.append(E)
        row = np.zeros(n_pad)
        row[:nc] = 1.0
        mask_rows.append(row)
    A_b = ad.stack(A_parts, axis=0)
    X_b = ad.stack(X_parts, axis=0)
    E_b = ad.stack(E_parts, axis=0) if E_parts else None
    mask = np.stack(mask_rows, axis=0)
    p_vars = {k: const(v) for k, v in classifier.params.items()}
    logits = _logits_taped(classifier, p_vars, A_b, X_b, E_b, mask)
    lsm = ad.log_softmax(logits, axis=-1)
    return -ad.vmean(lsm[:, y_star])


def _taped_loss(
    model: CsaModel,
    p: dict[str, Var],
    g: Graph,
    hosts: list[tuple[Graph, Occurrence]],
    classifier: ClassifierModel,
    y_star: int,
    noise: np.ndarray,
    dropout_masks=None,
) -> tuple[Var, dict[str, float]]:
    """Full training objective: distance + alpha * classifier NLL + KL."""
    if not hosts:
        raise ValueError("hosts must be nonempty")
    cfg = model.config
    mu, log_sigma = _encode_taped(model, p, g, dropout_masks)
    z = mu + ad.exp(log_sigma) * const(noise.reshape(1, -1))
    adj_logits, node_logits, edge_logits = _decode_taped(model, p, z, y_star)
    soft_adj, soft_nodes, soft_edges = _soft_outputs(model, adj_logits, node_logits, edge_logits)
    composites = [
        _compose_taped(h, occ, soft_adj, soft_nodes, soft_edges, model.base_node_count, model.capacity)
        for h, occ in hosts
    ]
    d_term = _distance_terms(model, adj_logits, node_logits, edge_logits, g)
    cls_term = _classifier_nll(classifier, composites, y_star)
    kl = _kl_term(mu, log_sigma)
    total = d_term + cfg.alpha * cls_term + kl
    terms = {
        "total": float(total.value),
        "distance": float(d_term.value),
        "classifier": float(cls_term.value),
        "kl": float(kl.value),
    }
    return total, terms


# ---------------------------------------------------------------------------
# Public (numpy) surface
# ---------------------------------------------------------------------------


def encode(model: CsaModel, g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic posterior parameters (mu, log sigma) of a subgraph."""
    p = {k: const(v) for k, v in model.params.items()}
    mu, log_sigma = _encode_taped(model, p, g, None)
    return mu.value.reshape(-1).copy(), log_sigma.value.reshape(-1).copy()


def sample_latent(mu: np.ndarray, log_sigma: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Reparameterized sample z = mu + exp(log_sigma) * noise."""
    return mu + np.exp(log_sigma) * noise


def decode(model: CsaModel, z: np.ndarray, y_star: int = 1) -> ProbabilisticSubgraph:
    """Probabilistic counterfactual subgraph for a latent point."""
    if y_star != 1:
        raise ValueError("the decoder is conditioned on the desired class (1)")
    p = {k: const(v) for k, v in model.params.items()}
    zv = const(np.asarray(z, dtype=float).reshape(1, -1))
    adj_logits, node_logits, edge_logits = _decode_taped(model, p, zv, y_star)
    soft_adj, soft_nodes, soft_edges = _soft_outputs(model, adj_logits, node_logits, edge_logits)
    return ProbabilisticSubgraph(
        soft_adjacency=soft_adj.value.copy(),
        soft_node_attrs=soft_nodes.value.copy(),
        soft_edge_attrs=None if soft_edges is None else soft_edges.value.copy(),
        base_node_count=model.base_node_count,
        extra_capacity=model.extra_capacity,
    )


def compose_soft(host: Graph, occ: Occurrence, ps: ProbabilisticSubgraph) -> SoftGraph:
    """Discrete host with the matched block replaced by soft entries."""
    soft_adj = Var(ps.soft_adjacency, requires_grad=False)
    soft_nodes = Var(ps.soft_node_attrs, requires_grad=False)
    soft_edges = (
        None if ps.soft_edge_attrs is None else Var(ps.soft_edge_attrs, requires_grad=False)
    )
    A, X, E, _ = _compose_taped(
        host, occ, soft_adj, soft_nodes, soft_edges,
        ps.base_node_count, ps.base_node_count + ps.extra_capacity,
    )
    return SoftGraph(A.value.copy(), X.value.copy(), None if E is None else E.value.copy())


def loss(
    model: CsaModel,
    g: Graph,
    ps: ProbabilisticSubgraph,
    hosts: list[tuple[Graph, Occurrence]],
    classifier: ClassifierModel,
    y_star: int = 1,
) -> tuple[float, dict[str, float]]:
    """Objective value for a given probabilistic subgraph: distance to the
    source + alpha * mean classifier NLL over host composites + KL of the
    encoder posterior against the unit Gaussian."""
    if not hosts:
        raise ValueError("hosts must be nonempty")
    cfg = model.config
    eps = 1e-12
    n_max = model.capacity
    iu = np.triu_indices(n_max, k=1)

    A_target = np.zeros((n_max, n_max))
    A_target[: model.base_node_count, : model.base_node_count] = g.adjacency
    pvals = np.clip(ps.soft_adjacency[iu], eps, 1 - eps)
    t = A_target[iu]
    d_term = float(-(t * np.log(pvals) + (1 - t) * np.log(1 - pvals)).sum())

    X_target = np.zeros((n_max, model.node_attr_dim))
    X_target[: model.base_node_count] = g.node_attrs
    d_term += cfg.beta * float(
        -(X_target * np.log(np.clip(ps.soft_node_attrs, eps, None))).sum()
    )
    if model.edge_attr_dim > 0 and ps.soft_edge_attrs is not None:
        E_target = np.zeros((n_max, n_max, model.edge_attr_dim))
        for (i, j), vec in g.edge_attrs.items():
            E_target[i, j] = E_target[j, i] = vec
        d_term += cfg.gamma * float(
            -(E_target[iu] * np.log(np.clip(ps.soft_edge_attrs[iu], eps, None))).sum()
        )

    from gce.classifier import forward as classifier_forward

    nll = 0.0
    for host, occ in hosts:
        logits = classifier_forward(classifier, compose_soft(host, occ, ps))
        shifted = logits - logits.max()
        nll -= float(shifted[y_star] - np.log(np.exp(shifted).sum()))
    cls_term = nll / len(hosts)

    mu, log_sigma = encode(model, g)
    kl_term = float(0.5 * (mu**2 + np.exp(2 * log_sigma) - 1.0 - 2 * log_sigma).sum())

    total = d_term + cfg.alpha * cls_term + kl_term
    return total, {
        "total": total,
        "distance": d_term,
        "classifier": cls_term,
        "kl": kl_term,
    }


def discretize(ps: ProbabilisticSubgraph) -> tuple[Graph, tuple[int, ...]]:
    """Threshold the soft subgraph into a hard graph plus the base-node map.

    Adjacency entries strictly above 0.5 become edges; attribute rows one-hot
    at their argmax; extra nodes with no discrete edge are dropped (base
    nodes always survive) and indices are compacted.
    """
    n_g = ps.base_node_count
    n_max = n_g + ps.extra_capacity
    hard = (ps.soft_adjacency > 0.5).astype(int)
    np.fill_diagonal(hard, 0)
    deg = hard.sum(axis=1)
    kept = [i for i in range(n_max) if i < n_g or deg[i] > 0]
    pos = {old: new for new, old in enumerate(kept)}
    n_new = len(kept)
    edges = [
        (pos[i], pos[j])
        for i in kept
        for j in kept
        if i < j and hard[i, j]
    ]
    labels = [int(np.argmax(ps.soft_node_attrs[i])) for i in kept]
    elabels = None
    if ps.soft_edge_attrs is not None:
        inv = {new: old for old, new in pos.items()}
        elabels = [
            int(np.argmax(ps.soft_edge_attrs[inv[i], inv[j]])) for i, j in edges
        ]
    graph = graph_from_edges(
        n_new,
        edges,
        labels,
        ps.soft_node_attrs.shape[1],
        elabels,
        0 if ps.soft_edge_attrs is None else ps.soft_edge_attrs.shape[2],
    )
    correspondence = tuple(range(n_g))
    return graph, correspondence


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _adam_step(state: dict, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
    state["t"] += 1
    t = state["t"]
    for name, value in params.items():
        g = grads[name]
        m = state["m"].setdefault(name, np.zeros_like(value))
        v = state["v"].setdefault(name, np.zeros_like(value))
        state["m"][name] = 0.9 * m + 0.1 * g
        state["v"][name] = 0.999 * v + 0.001 * g * g
        mhat = state["m"][name] / (1 - 0.9**t)
        vhat = state["v"][name] / (1 - 0.999**t)
        params[name] = value - lr * mhat / (np.sqrt(vhat) + 1e-8)


def train_csa(
    significant: list[FrequentPattern],
    dataset: GraphDataset,
    classifier: ClassifierModel,
    config: CsaConfig,
) -> list[CsmCandidate]:
    """Train one autoencoder per significant pattern and emit discretized
    counterfactual rewrite candidates.

    Hosts are the pattern's supporting graphs; one deterministic occurrence
    per host anchors the soft composite.  Minibatches cycle deterministically;
    the noise and dropout streams are seeded per pattern.
    """
    candidates = []
    for index, pattern in enumerate(significant):
        candidates.append(_train_one(pattern, index, dataset, classifier, config))
    return candidates


def _train_one(
    pattern: FrequentPattern,
    index: int,
    dataset: GraphDataset,
    classifier: ClassifierModel,
    config: CsaConfig,
) -> CsmCandidate:
    if not pattern.support_ids:
        raise ValueError("pattern has empty support")
    g = pattern.graph
    rng = np.random.default_rng([config.seed, index])
    model = init_csa_model(g, config, rng)
    params = {k: v.copy() for k, v in model.params.items()}

    hosts: list[tuple[Graph, Occurrence]] = []
    for gid in pattern.support_ids:
        host = dataset.graphs[gid]
        occs = find_occurrences(g, host, 1)
        if not occs:
            raise ValueError(f"support graph {gid} does not contain the pattern")
        hosts.append((host, occs[0]))

    hid = config.encoder_hidden
    n_nodes = g.node_count
    state = {"t": 0, "m": {}, "v": {}}
    batch = min(MINIBATCH, len(hosts))
    cursor = 0
    last_terms: dict[str, float] = {}
    for _epoch in range(config.epochs):
        for _step in range(max(1, (len(hosts) + batch - 1) // batch)):
            chunk = [hosts[(cursor + k) % len(hosts)] for k in range(batch)]
            cursor = (cursor + batch) % len(hosts)
            noise = rng.standard_normal(config.latent_dim)
            masks = None
            if config.dropout > 0.0:
                keep = 1.0 - config.dropout
                masks = tuple(
                    (rng.random((n_nodes, hid)) < keep).astype(float) / keep
                    for _ in range(2)
                )
            live = CsaModel(params, model.base_node_count, model.extra_capacity,
                            model.node_attr_dim, model.edge_attr_dim, config)
            p_vars = {k: Var(v) for k, v in params.items()}
            total, last_terms = _taped_loss(
                live, p_vars, g, chunk, classifier, 1, noise, masks
            )
            total.backward()
            grads = {
                k: (v.grad if v.grad is not None else np.zeros_like(v.value))
                for k, v in p_vars.items()
            }
            _adam_step(state, params, grads, config.learning_rate)

    final = CsaModel(params, model.base_node_count, model.extra_capacity,
                     model.node_attr_dim, model.edge_attr_dim, config)
    mu, _ = encode(final, g)
    ps = decode(final, mu, 1)
    counterfactual, correspondence = discretize(ps)
    eval_hosts = hosts[: min(64, len(hosts))]
    _, terms = loss(final, g, ps, eval_hosts, classifier, 1)
    return CsmCandidate(
        source=g,
        counterfactual=counterfactual,
        correspondence=correspondence,
        train_stats=terms,
    )


# ---------------------------------------------------------------------------
# Candidate dump
# ---------------------------------------------------------------------------


def save_candidates(
    candidates: list[CsmCandidate], path: str, dataset: GraphDataset, config: CsaConfig
) -> None:
    header = {
        "format": CANDIDATE_FORMAT,
        "dataset": dataset.name,
        "node_vocab": list(dataset.node_vocab),
        "edge_vocab": list(dataset.edge_vocab),
        "alpha": config.alpha,
        "delta": config.delta,
        "count": len(candidates),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for cand in candidates:
            rec = {
                "source_dfs_code": [list(t) for t in minimum_dfs_code(cand.source)],
                "counterfactual": cand.counterfactual.to_dict(),
                "correspondence": list(cand.correspondence),
                "loss": cand.train_stats,
            }
            fh.write(json.dumps(rec) + "\n")


def load_candidates(path: str) -> tuple[list[CsmCandidate], dict]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]
    if not lines:
        raise ValueError(f"empty candidate dump: {path}")
    header = json.loads(lines[0])
    if header.get("format") != CANDIDATE_FORMAT:
        raise ValueError(f"unsupported candidate dump format: {header.get('format')!r}")
    l = max(len(header["node_vocab"]), 1)
    m = len(header["edge_vocab"])
    out = []
    for line in lines[1:]:
        rec = json.loads(line)
        code = tuple(tuple(int(x) for x in t) for t in rec["source_dfs_code"])
        out.append(
            CsmCandidate(
                source=graph_from_dfs_code(code, l, m),
                counterfactual=Graph.from_dict(rec["counterfactual"]),
                correspondence=tuple(int(i) for i in rec["correspondence"]),
                train_stats=rec["loss"],
            )
        )
    return out, header
