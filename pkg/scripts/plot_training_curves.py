"""Plot per-block mean-score curves from training manifests.

Reads every manifest_*.json in a run directory and draws one line per
training block (attacker blocks solid, defender blocks dashed), x = update
index within the block, y = mean learner score of that update's rollout.

Usage:
    python scripts/plot_training_curves.py runs/full
    python scripts/plot_training_curves.py runs/full --save curves.png
"""

import argparse
import glob
import json
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load_manifests(run_dir: str) -> list[dict]:
    paths = sorted(glob.glob(os.path.join(run_dir, "manifest_*.json")))
    if not paths:
        raise SystemExit(f"no manifest_*.json files in {run_dir}")
    docs = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
        if doc.get("kind") != "training_manifest":
            raise SystemExit(f"{path}: not a training manifest")
        docs.append(doc)
    return docs


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", help="run directory containing manifest_*.json")
    ap.add_argument("--save", default=None, help="output image path (default: <run_dir>/training_curves.png)")
    args = ap.parse_args(argv)

    docs = load_manifests(args.run_dir)
    phases = sorted({doc["phase"] for doc in docs})
    fig, axes = plt.subplots(1, len(phases), figsize=(6 * len(phases), 4), squeeze=False)
    ax_for = {phase: axes[0][i] for i, phase in enumerate(phases)}

    for doc in docs:
        ax = ax_for[doc["phase"]]
        for block in doc["blocks"]:
            style = "-" if block["role"] == "antagonist" else "--"
            label = f"r{doc['round']}b{block['block_index']} {block['role'][:3]}"
            ax.plot(block["mean_scores"], style, alpha=0.7, label=label)

    for phase, ax in ax_for.items():
        ax.set_title(f"phase {phase} blocks")
        ax.set_xlabel("update within block")
        ax.set_ylabel("mean learner score per rollout")
        ax.axhline(0.0, color="gray", lw=0.5)
        if sum(len(d["blocks"]) for d in docs if d["phase"] == phase) <= 12:
            ax.legend(fontsize=7)
    fig.tight_layout()

    out = args.save or os.path.join(args.run_dir, "training_curves.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
