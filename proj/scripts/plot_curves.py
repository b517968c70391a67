#!/usr/bin/env python3
"""Plots return level curves from curves.csv, one panel per functional."""
import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("curves")
    ap.add_argument("--out", default="curves.png")
    args = ap.parse_args()

    series = defaultdict(list)
    with open(args.curves, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["functional"], row["region"], row["scale"])
            series[key].append((float(row["N"]), float(row["level"]), float(row["se"])))

    functionals = sorted({k[0] for k in series})
    fig, axes = plt.subplots(1, len(functionals), figsize=(5 * len(functionals), 4), squeeze=False)
    for ax, fn in zip(axes[0], functionals):
        for (f, region, scale), pts in sorted(series.items()):
            if f != fn:
                continue
            pts.sort()
            n = [p[0] for p in pts]
            lv = [p[1] for p in pts]
            se = [p[2] for p in pts]
            line, = ax.plot(n, lv, label=region)
            ax.fill_between(n, [a - 2 * b for a, b in zip(lv, se)], [a + 2 * b for a, b in zip(lv, se)],
                            color=line.get_color(), alpha=0.2)
            ax.set_ylabel(f"level ({scale})")
        ax.set_xscale("log")
        ax.set_xlabel("return period N")
        ax.set_title(fn)
        ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
