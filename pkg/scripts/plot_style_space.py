"""Scatter the characterized defenders in style space and mark the selection.

Reads style_report.json from a run directory, plots the defenders on the
first two principal components, and circles the policies picked by the
max-min-distance selection.

Usage:
    python scripts/plot_style_space.py runs/full
    python scripts/plot_style_space.py runs/full --save style.png
"""

import argparse
import json
import os
import sys

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run_dir", help="run directory containing style_report.json")
    ap.add_argument("--save", default=None, help="output image path (default: <run_dir>/style_space.png)")
    args = ap.parse_args(argv)

    path = os.path.join(args.run_dir, "style_report.json")
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("kind") != "style_report":
        raise SystemExit(f"{path}: not a style report")

    projected = np.asarray(doc["projected"])
    ids = doc["feature_matrix"]["protagonist_ids"]
    selected = set(doc["selected_indices"])
    ratios = doc["pca"]["explained_variance_ratios"]

    fig, ax = plt.subplots(figsize=(6, 5))
    y = projected[:, 1] if projected.shape[1] > 1 else np.zeros(len(ids))
    ax.scatter(projected[:, 0], y, c="steelblue", zorder=3)
    for i in selected:
        ax.scatter(projected[i, 0], y[i], s=180, facecolors="none",
                   edgecolors="crimson", lw=2, zorder=4)
    for i, pid in enumerate(ids):
        ax.annotate(pid, (projected[i, 0], y[i]), fontsize=7,
                    xytext=(4, 4), textcoords="offset points")

    ax.set_xlabel(f"component 1 ({ratios[0]:.0%} var)")
    if len(ratios) > 1:
        ax.set_ylabel(f"component 2 ({ratios[1]:.0%} var)")
    ax.set_title("defender styles (selected circled)")
    ax.axhline(0.0, color="gray", lw=0.5)
    ax.axvline(0.0, color="gray", lw=0.5)
    fig.tight_layout()

    out = args.save or os.path.join(args.run_dir, "style_space.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
