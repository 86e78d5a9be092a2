"""Drive the staged command-line pipeline and poke at its artifacts."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

CONFIG = """\
dataset.kind = synthetic
dataset.count = 200
gnn.epochs = 300
gnn.lr = 0.01
gnn.finetune_epochs = 0
miner.tau = 0.3
miner.min_nodes = 4
miner.max_nodes = 5
miner.k_candidates = 5
csa.epochs = 10
csa.lr = 0.02
summarize.k = 3
seeds = 0
output_dir = {out}
"""

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "out"
    config = Path(tmp) / "config.txt"
    config.write_text(CONFIG.format(out=out))

    for command in ("synth", "train-gnn", "mine", "train-csa", "summarize", "evaluate"):
        print(f"$ gce {command} --config {config.name}")
        proc = subprocess.run(
            [sys.executable, "-m", "gce.cli", command, "--config", str(config)],
            capture_output=True,
            text=True,
        )
        print(proc.stdout, end="")
        if proc.returncode != 0:
            print(proc.stderr, end="")
            raise SystemExit(proc.returncode)

    seed_dir = out / "seed_0"
    rules = (seed_dir / "rules.txt").read_text()
    print("\n--- human-readable rule report ---")
    print(rules)
    results = (seed_dir / "results.jsonl").read_text().splitlines()
    print("--- results summary record ---")
    print(json.dumps(json.loads(results[0]), indent=2))
