#!/usr/bin/env python3
"""Scatter of empirical and fitted pairwise extremal coefficients against distance."""
import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("table", help="theta_pairs.csv")
    ap.add_argument("--out", default="theta.png")
    args = ap.parse_args()

    d, emp, fit = [], [], []
    with open(args.table, newline="") as f:
        for row in csv.DictReader(f):
            d.append(float(row["distance"]))
            emp.append(float(row["empirical"]))
            fit.append(float(row["fitted"]) if row["fitted"] not in ("", "nan") else float("nan"))

    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
    a.scatter(d, emp, s=6, label="empirical", alpha=0.6)
    a.scatter(d, fit, s=6, label="fitted", alpha=0.6)
    a.set_xlabel("distance")
    a.set_ylabel("theta")
    a.set_ylim(1, 2)
    a.legend()
    b.scatter(fit, emp, s=6, alpha=0.6)
    b.plot([1, 2], [1, 2], color="k", lw=0.8)
    b.set_xlabel("fitted theta")
    b.set_ylabel("empirical theta")
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
