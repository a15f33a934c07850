#!/usr/bin/env python3
"""Plot the output of `dopt region` (and optionally its --boundary file).

    dopt region --beta0 -1 --range -2:2:81 --boundary edge.csv > region.csv
    python3 docs/plot_region.py region.csv --boundary edge.csv -o region.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("region", help="CSV from dopt region")
    ap.add_argument("--boundary", help="segment CSV from dopt region --boundary")
    ap.add_argument("-o", "--output", default="region.png")
    args = ap.parse_args()

    grid = pd.read_csv(args.region)
    fig, ax = plt.subplots(figsize=(5, 5))
    ok = grid.dropna(subset=["verdict"])
    inside = ok[ok["verdict"] == 1]
    outside = ok[ok["verdict"] == 0]
    ax.scatter(outside["beta1"], outside["beta2"], s=4, c="lightgray", label="interior support")
    ax.scatter(inside["beta1"], inside["beta2"], s=4, c="tab:blue", label="corners optimal")
    missing = grid[grid["verdict"].isna()]
    if len(missing):
        ax.scatter(missing["beta1"], missing["beta2"], s=8, marker="x", c="tab:red", label="failed")
    if args.boundary:
        seg = pd.read_csv(args.boundary)
        for row in seg.itertuples(index=False):
            ax.plot([row.beta1_start, row.beta1_end], [row.beta2_start, row.beta2_end], c="k", lw=1)
    ax.set_xlabel("beta1")
    ax.set_ylabel("beta2")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
