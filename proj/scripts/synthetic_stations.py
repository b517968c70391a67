#!/usr/bin/env python3
"""Writes a planar stations file with altitude, longitude and latitude columns.

Altitude rises from west to east with a ridge, so covariate-driven models
have something to find. Longitude and latitude are the planar x and y.
"""
import argparse
import csv
import math
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default="data/synthetic_stations.csv")
    args = ap.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "x", "y", "altitude", "longitude", "latitude"])
        for k in range(args.count):
            x, y = rng.random(), rng.random()
            alt = 1500 + 1800 * x + 600 * math.exp(-((x - 0.7) ** 2) / 0.02) + rng.gauss(0, 60)
            w.writerow([f"st{k + 1:02d}", f"{x:.4f}", f"{y:.4f}", f"{alt:.0f}", f"{x:.4f}", f"{y:.4f}"])


if __name__ == "__main__":
    main()
