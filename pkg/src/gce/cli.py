"""Command-line pipeline: synth, train-gnn, mine, train-csa, summarize,
evaluate, run-all.

Every run is driven by one key-value config file (dotted section keys) plus
a handful of flag overrides; all randomness flows from the explicit seed
list.  Each stage writes a versioned dump that the next stage (or a rerun)
loads back, and run-all records a manifest of artifact hashes so reruns can
be compared byte for byte.

Exit codes: 0 success, 1 usage/config error, 2 runtime/data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from gce.autoencoder import CsaConfig, load_candidates, save_candidates, train_csa
from gce.classifier import TrainConfig, load_model, predict, save_model, train
from gce.graphs import (
    GraphDataset,
    WeightedDistanceConfig,
    generate_synthetic,
    parse_tu_dataset,
    write_tu_dataset,
)
from gce.metrics import evaluate_global, write_results
from gce.mining import MinerConfig, load_patterns, mine_frequent, save_patterns, select_significant
from gce.summarize import CsmSet, coverage, export_rules, greedy_select, load_rules

__all__ = ["main", "RunConfig", "load_config", "dump_config"]

MANIFEST_FORMAT = "gce-manifest-v1"


class ConfigError(Exception):
    """Configuration or usage problem (exit code 1)."""


class DataError(Exception):
    """Missing or malformed runtime data (exit code 2)."""


# Reference hyperparameters for the standard benchmark datasets: classifier
# (epochs, lr, weight decay), miner minimum appearance rate, autoencoder
# (epochs, lr) and candidate budget.
DATASET_DEFAULTS = {
    "NCI1": {"gnn": (100, 0.1, 0.001), "tau": 0.6410, "csa": (100, 0.01), "k_candidates": 20},
    "AIDS": {"gnn": (300, 0.01, 0.01), "tau": 0.2044, "csa": (300, 0.01), "k_candidates": 30},
    "Mutagenicity": {"gnn": (100, 0.01, 0.001), "tau": 0.9259, "csa": (100, 0.1), "k_candidates": 20},
    "PROTEINS": {"gnn": (400, 0.0001, 0.0001), "tau": 0.2857, "csa": (100, 0.01), "k_candidates": 20},
    "ENZYMES": {"gnn": (400, 0.001, 0.01), "tau": 0.1020, "csa": (100, 0.01), "k_candidates": 10},
}


@dataclass(frozen=True)
class RunConfig:
    """One serializable source of truth for a pipeline run."""

    dataset_kind: str = "synthetic"
    dataset_count: int = 1000
    dataset_path: str = ""
    dataset_name: str = "synthetic"
    dataset_label_map: str = ""
    gnn_architecture: str = "auto"
    gnn_epochs: int = 1500
    gnn_lr: float = 0.01
    gnn_weight_decay: float = 0.0
    gnn_optimizer: str = "adam"
    gnn_split: tuple[float, float, float] = (0.5, 0.25, 0.25)
    gnn_restarts: int = 1
    gnn_finetune_epochs: int = 1000
    miner_tau: float = 0.3
    miner_min_nodes: int = 4
    miner_max_nodes: int = 5
    miner_k_candidates: int = 8
    miner_selection_mode: str = "top_ar"
    csa_alpha: float = 10.0
    csa_delta: int = 2
    csa_rho: float = 1.0
    csa_beta: float = 1.0
    csa_gamma: float = 1.0
    csa_epochs: int = 30
    csa_lr: float = 0.01
    csa_dropout: float = 0.5
    summarize_k: int = 5
    summarize_max_simultaneous: int = 2
    summarize_max_occ: int = 10
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    output_dir: str = "out"
    threads: int = 1

    def validate(self) -> None:
        if self.dataset_kind not in ("synthetic", "tu"):
            raise ConfigError(f"dataset.kind must be synthetic or tu, got {self.dataset_kind!r}")
        if self.summarize_k > self.miner_k_candidates:
            raise ConfigError(
                f"summarize.k ({self.summarize_k}) cannot exceed miner.k_candidates "
                f"({self.miner_k_candidates})"
            )
        if self.summarize_k < 1 or not self.seeds:
            raise ConfigError("summarize.k must be >= 1 and seeds must be nonempty")
        if self.dataset_kind == "synthetic" and (self.dataset_count < 2 or self.dataset_count % 2):
            raise ConfigError("dataset.count must be even and >= 2")

    def distance_weights(self) -> WeightedDistanceConfig:
        return WeightedDistanceConfig(self.csa_rho, self.csa_beta, self.csa_gamma)


_KEYMAP = {f.name: f.name.replace("_", ".", 1) for f in fields(RunConfig)}
_KEYMAP["seeds"] = "seeds"
_KEYMAP["output_dir"] = "output_dir"
_KEYMAP["threads"] = "threads"
_DOTTED = {v: k for k, v in _KEYMAP.items()}


def _parse_value(name: str, raw: str):
    kind = RunConfig.__dataclass_fields__[name].type
    raw = raw.strip()
    if name == "seeds":
        return tuple(int(x) for x in raw.split(",") if x.strip() != "")
    if name == "gnn_split":
        parts = [float(x) for x in raw.split(",")]
        if len(parts) != 3:
            raise ConfigError("gnn.split needs three comma-separated fractions")
        return tuple(parts)
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected 'key = value'")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in _DOTTED:
                    raise ConfigError(f"{path}:{line_no}: unknown config key {key!r}")
                name = _DOTTED[key]
                try:
                    values[name] = _parse_value(name, raw)
                except ConfigError:
                    raise
                except ValueError as exc:
                    raise ConfigError(f"{path}:{line_no}: bad value for {key}: {exc}") from exc
    if overrides:
        values.update(overrides)
    explicit = set(values)
    config = RunConfig(**values)
    # reference hyperparameters for the known benchmark datasets fill any
    # fields the user left untouched
    if config.dataset_kind == "tu" and config.dataset_name in DATASET_DEFAULTS:
        table = DATASET_DEFAULTS[config.dataset_name]
        epochs, lr, wd = table["gnn"]
        csa_epochs, csa_lr = table["csa"]
        defaults = {
            "gnn_epochs": epochs,
            "gnn_lr": lr,
            "gnn_weight_decay": wd,
            "miner_tau": table["tau"],
            "miner_min_nodes": 3,
            "miner_max_nodes": 20,
            "miner_k_candidates": table["k_candidates"],
            "csa_epochs": csa_epochs,
            "csa_lr": csa_lr,
        }
        config = replace(
            config, **{k: v for k, v in defaults.items() if k not in explicit}
        )
    config.validate()
    return config


def dump_config(config: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(config, f.name)
        if f.name in ("seeds",):
            rendered = ",".join(str(v) for v in value)
        elif f.name == "gnn_split":
            rendered = ",".join(repr(float(v)) for v in value)
        else:
            rendered = str(value)
        lines.append(f"{_KEYMAP[f.name]} = {rendered}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def _seed_dir(config: RunConfig, seed: int) -> str:
    path = os.path.join(config.output_dir, f"seed_{seed}")
    os.makedirs(path, exist_ok=True)
    return path


def _paths(config: RunConfig, seed: int) -> dict[str, str]:
    base = _seed_dir(config, seed)
    return {
        "dataset": os.path.join(base, "dataset"),
        "gnn": os.path.join(base, "gnn.json"),
        "gnn_report": os.path.join(base, "gnn_report.json"),
        "patterns": os.path.join(base, "patterns.jsonl"),
        "candidates": os.path.join(base, "candidates.jsonl"),
        "rules": os.path.join(base, "rules.jsonl"),
        "rules_text": os.path.join(base, "rules.txt"),
        "results": os.path.join(base, "results.jsonl"),
        "manifest": os.path.join(base, "manifest.json"),
    }


def stage_dataset(config: RunConfig, seed: int) -> GraphDataset:
    if config.dataset_kind == "synthetic":
        dataset = generate_synthetic(config.dataset_count, seed)
        out = _paths(config, seed)["dataset"]
        write_tu_dataset(dataset, out)
        return dataset
    if not os.path.isdir(config.dataset_path):
        raise DataError(f"dataset path does not exist: {config.dataset_path}")
    label_map = config.dataset_label_map or None
    try:
        return parse_tu_dataset(config.dataset_path, config.dataset_name, label_map)
    except (FileNotFoundError, ValueError) as exc:
        raise DataError(str(exc)) from exc


def _dataset_for(config: RunConfig, seed: int) -> GraphDataset:
    """Load the stage-1 dataset artifact (or the TU input) for later stages."""
    if config.dataset_kind == "synthetic":
        path = _paths(config, seed)["dataset"]
        if not os.path.isdir(path):
            raise DataError(f"dataset artifact missing (run synth first): {path}")
        return parse_tu_dataset(path, config.dataset_name)
    return stage_dataset(config, seed)


def stage_train_gnn(config: RunConfig, seed: int, dataset: GraphDataset):
    train_config = TrainConfig(
        epochs=config.gnn_epochs,
        learning_rate=config.gnn_lr,
        weight_decay=config.gnn_weight_decay,
        optimizer=config.gnn_optimizer,
        split=config.gnn_split,
        seed=seed,
        architecture=config.gnn_architecture,
        restarts=config.gnn_restarts,
        finetune_epochs=config.gnn_finetune_epochs,
    )
    model, report = train(dataset, train_config)
    paths = _paths(config, seed)
    save_model(model, paths["gnn"])
    with open(paths["gnn_report"], "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True)
    return model, report


def _load_classifier(config: RunConfig, seed: int):
    path = _paths(config, seed)["gnn"]
    if not os.path.isfile(path):
        raise DataError(f"classifier checkpoint missing (run train-gnn first): {path}")
    return load_model(path)


def _undesired_subset(dataset: GraphDataset, model) -> tuple[GraphDataset, list[int]]:
    ids = [i for i, g in enumerate(dataset.graphs) if predict(model, g) == 0]
    return dataset.subset(ids, dataset.name), ids


def stage_mine(config: RunConfig, seed: int, dataset: GraphDataset, model):
    subset, host_ids = _undesired_subset(dataset, model)
    if len(subset) == 0:
        raise DataError("the classifier labels no graph undesired; nothing to mine")
    miner_config = MinerConfig(
        tau=config.miner_tau,
        min_nodes=config.miner_min_nodes,
        max_nodes=config.miner_max_nodes,
        k_candidates=config.miner_k_candidates,
        selection_mode=config.miner_selection_mode,
    )
    patterns = mine_frequent(subset, miner_config)
    significant = select_significant(
        patterns, config.miner_k_candidates, config.miner_selection_mode
    )
    paths = _paths(config, seed)
    save_patterns(significant, paths["patterns"], subset)
    # record which full-dataset graphs the support ids refer to
    with open(paths["patterns"], "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header = json.loads(lines[0])
    header["host_ids"] = host_ids
    lines[0] = json.dumps(header) + "\n"
    with open(paths["patterns"], "w", encoding="utf-8") as fh:
        fh.writelines(lines)
    return significant, subset, host_ids


def _load_patterns_stage(config: RunConfig, seed: int, dataset: GraphDataset):
    path = _paths(config, seed)["patterns"]
    if not os.path.isfile(path):
        raise DataError(f"pattern dump missing (run mine first): {path}")
    try:
        patterns, header = load_patterns(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    host_ids = [int(i) for i in header.get("host_ids", [])]
    subset = dataset.subset(host_ids, dataset.name)
    return patterns, subset, host_ids


def stage_train_csa(config: RunConfig, seed: int, subset: GraphDataset, model, patterns):
    csa_config = CsaConfig(
        alpha=config.csa_alpha,
        delta=config.csa_delta,
        beta=config.csa_beta,
        gamma=config.csa_gamma,
        epochs=config.csa_epochs,
        learning_rate=config.csa_lr,
        dropout=config.csa_dropout,
        seed=seed,
    )
    candidates = train_csa(patterns, subset, model, csa_config)
    save_candidates(candidates, _paths(config, seed)["candidates"], subset, csa_config)
    return candidates


def _load_candidates_stage(config: RunConfig, seed: int):
    path = _paths(config, seed)["candidates"]
    if not os.path.isfile(path):
        raise DataError(f"candidate dump missing (run train-csa first): {path}")
    try:
        return load_candidates(path)[0]
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def stage_summarize(config: RunConfig, seed: int, subset: GraphDataset, model, candidates):
    paths = _paths(config, seed)
    if not candidates:
        empty = CsmSet((), 0)
        report = coverage(empty, subset, model, config.distance_weights(),
                          config.summarize_max_simultaneous, config.summarize_max_occ,
                          config.threads)
        export_rules(empty, [], report, paths["rules"], paths["rules_text"])
        return empty, [], report
    k = min(config.summarize_k, len(candidates))
    chosen, trace = greedy_select(
        candidates,
        k,
        subset,
        model,
        config.distance_weights(),
        config.summarize_max_simultaneous,
        config.summarize_max_occ,
        config.threads,
    )
    report = coverage(
        chosen, subset, model, config.distance_weights(),
        config.summarize_max_simultaneous, config.summarize_max_occ, config.threads,
    )
    report = replace(report, per_csm_marginals=tuple(
        (t["candidate_index"], t["marginal_covered"]) for t in trace
    ))
    export_rules(chosen, trace, report, paths["rules"], paths["rules_text"])
    return chosen, trace, report


def stage_evaluate(config: RunConfig, seed: int, subset: GraphDataset, model):
    paths = _paths(config, seed)
    if not os.path.isfile(paths["rules"]):
        raise DataError(f"rules file missing (run summarize first): {paths['rules']}")
    try:
        rules, header = load_rules(paths["rules"])
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    csm_set = CsmSet(tuple(rules), max(len(rules), header.get("k", 0), 1))
    result = evaluate_global(
        csm_set,
        subset,
        model,
        config.distance_weights(),
        config.summarize_max_simultaneous,
        config.summarize_max_occ,
        config.threads,
    )
    write_results(result, paths["results"], seed=seed)
    return result


# ---------------------------------------------------------------------------
# Hashing / manifest
# ---------------------------------------------------------------------------


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _sha256_tree(path: str) -> str:
    if os.path.isfile(path):
        return _sha256_file(path)
    h = hashlib.sha256()
    for name in sorted(os.listdir(path)):
        h.update(name.encode())
        h.update(_sha256_file(os.path.join(path, name)).encode())
    return h.hexdigest()


def write_manifest(config: RunConfig, seed: int) -> dict:
    paths = _paths(config, seed)
    stages = {}
    for stage in ("dataset", "gnn", "patterns", "candidates", "rules", "results"):
        target = paths[stage]
        stages[stage] = {
            "path": os.path.relpath(target, config.output_dir),
            "sha256": _sha256_tree(target),
        }
    manifest = {"format": MANIFEST_FORMAT, "seed": seed, "stages": stages}
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
    return manifest


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _print_result(seed: int, result) -> None:
    summary = result.summary()
    prox = "n/a" if summary["proximity"] is None else f"{summary['proximity']:.4f}"
    comp = (
        "n/a"
        if summary["comprehensibility"] is None
        else f"{summary['comprehensibility']:.4f}"
    )
    print(
        f"seed {seed}: cove. {summary['coverage_pct']:.2f}%  prox. {prox}  comp. {comp}"
        f"  ({summary['covered_count']}/{summary['evaluated_count']} hosts)"
    )


def cmd_synth(config: RunConfig, seeds) -> int:
    for seed in seeds:
        dataset = stage_dataset(config, seed)
        print(f"seed {seed}: wrote {len(dataset)} graphs to {_paths(config, seed)['dataset']}")
    return 0


def cmd_train_gnn(config: RunConfig, seeds) -> int:
    for seed in seeds:
        dataset = _dataset_for(config, seed)
        _, report = stage_train_gnn(config, seed, dataset)
        print(
            f"seed {seed}: {report['architecture']} train {report['train_accuracy']:.4f} "
            f"val {report['val_accuracy']:.4f} test {report['test_accuracy']:.4f}"
        )
    return 0


def cmd_mine(config: RunConfig, seeds) -> int:
    for seed in seeds:
        dataset = _dataset_for(config, seed)
        model = _load_classifier(config, seed)
        significant, subset, _ = stage_mine(config, seed, dataset, model)
        print(
            f"seed {seed}: {len(significant)} significant patterns over "
            f"{len(subset)} undesired graphs"
        )
    return 0


def cmd_train_csa(config: RunConfig, seeds) -> int:
    for seed in seeds:
        dataset = _dataset_for(config, seed)
        model = _load_classifier(config, seed)
        patterns, subset, _ = _load_patterns_stage(config, seed, dataset)
        candidates = stage_train_csa(config, seed, subset, model, patterns)
        print(f"seed {seed}: trained {len(candidates)} counterfactual candidates")
    return 0


def cmd_summarize(config: RunConfig, seeds) -> int:
    for seed in seeds:
        dataset = _dataset_for(config, seed)
        model = _load_classifier(config, seed)
        _, subset, _ = _load_patterns_stage(config, seed, dataset)
        candidates = _load_candidates_stage(config, seed)
        chosen, _, report = stage_summarize(config, seed, subset, model, candidates)
        print(
            f"seed {seed}: selected {len(chosen.csms)} rules, coverage "
            f"{100 * report.coverage:.2f}%"
        )
    return 0


def cmd_evaluate(config: RunConfig, seeds) -> int:
    rows = []
    for seed in seeds:
        dataset = _dataset_for(config, seed)
        model = _load_classifier(config, seed)
        _, subset, _ = _load_patterns_stage(config, seed, dataset)
        result = stage_evaluate(config, seed, subset, model)
        _print_result(seed, result)
        rows.append(result.summary())
    _aggregate(config, rows, seeds)
    return 0


def _aggregate(config: RunConfig, rows: list[dict], seeds) -> None:
    def series(key):
        return [r[key] for r in rows if r[key] is not None]

    summary = {"seeds": list(seeds), "per_seed": rows, "aggregate": {}}
    for key in ("coverage_pct", "proximity", "comprehensibility"):
        values = series(key)
        if values:
            summary["aggregate"][key] = {
                "mean": float(np.mean(values)),
                "std": float(np.std(values)),
            }
        else:
            summary["aggregate"][key] = None
    path = os.path.join(config.output_dir, "summary.json")
    os.makedirs(config.output_dir, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
    if len(rows) > 1:
        agg = summary["aggregate"]
        parts = []
        for key, label in (
            ("coverage_pct", "cove."),
            ("proximity", "prox."),
            ("comprehensibility", "comp."),
        ):
            if agg[key] is None:
                parts.append(f"{label} n/a")
            else:
                parts.append(f"{label} {agg[key]['mean']:.2f}+-{agg[key]['std']:.2f}")
        print("mean over seeds: " + "  ".join(parts))


def cmd_run_all(config: RunConfig, seeds) -> int:
    rows = []
    for seed in seeds:
        stage = "synth"
        try:
            dataset = stage_dataset(config, seed)
            stage = "train-gnn"
            model, report = stage_train_gnn(config, seed, dataset)
            stage = "mine"
            significant, subset, _ = stage_mine(config, seed, dataset, model)
            stage = "train-csa"
            candidates = stage_train_csa(config, seed, subset, model, significant)
            stage = "summarize"
            stage_summarize(config, seed, subset, model, candidates)
            stage = "evaluate"
            result = stage_evaluate(config, seed, subset, model)
        except (DataError, ValueError, OSError) as exc:
            raise DataError(f"stage {stage} failed for seed {seed}: {exc}") from exc
        write_manifest(config, seed)
        print(
            f"seed {seed}: pipeline complete "
            f"(classifier test acc {report['test_accuracy']:.4f})"
        )
        _print_result(seed, result)
        rows.append(result.summary())
    _aggregate(config, rows, seeds)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gce",
        description="Global counterfactual explanations for graph classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "train-gnn", "mine", "train-csa", "summarize", "evaluate", "run-all"):
        p = sub.add_parser(name)
        p.add_argument("--config", default="", help="key-value config file")
        p.add_argument("--seed", type=int, default=None, help="override the seed list")
        p.add_argument("--threads", type=int, default=None, help="worker thread bound")
        p.add_argument("--out", default=None, help="output directory")
        if name == "synth":
            p.add_argument("--count", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        overrides: dict = {}
        if args.out is not None:
            overrides["output_dir"] = args.out
        if args.threads is not None:
            overrides["threads"] = args.threads
        elif os.environ.get("GCE_THREADS"):
            try:
                overrides["threads"] = int(os.environ["GCE_THREADS"])
            except ValueError as exc:
                raise ConfigError(f"bad GCE_THREADS value: {os.environ['GCE_THREADS']!r}") from exc
        if getattr(args, "count", None) is not None:
            overrides["dataset_count"] = args.count
        config = load_config(args.config, overrides)
        seeds = (args.seed,) if args.seed is not None else config.seeds
        command = {
            "synth": cmd_synth,
            "train-gnn": cmd_train_gnn,
            "mine": cmd_mine,
            "train-csa": cmd_train_csa,
            "summarize": cmd_summarize,
            "evaluate": cmd_evaluate,
            "run-all": cmd_run_all,
        }[args.command]
        return command(config, seeds)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
