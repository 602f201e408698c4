#!/usr/bin/env python3
"""Quick-look plots for scenario output directories.

Usage: plot_scenarios.py OUT_DIR [...]

Each OUT_DIR should be the --out directory of a `harmonium-cli run`
invocation; the script infers what to draw from the files present and saves
PNGs alongside the CSVs.
"""

import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    return header, rows


def numeric(rows, col):
    return np.array([float(r[col]) for r in rows])


def plot_density_1d(path, out):
    _, rows = load(path)
    plt.figure()
    plt.plot(numeric(rows, 0), numeric(rows, 1))
    plt.xlabel("x")
    plt.ylabel("density")
    plt.savefig(out, dpi=120, bbox_inches="tight")
    plt.close()


def plot_density_2d(path, out):
    _, rows = load(path)
    x, y, d = numeric(rows, 0), numeric(rows, 1), numeric(rows, 2)
    side = int(round(np.sqrt(len(rows))))
    plt.figure()
    plt.pcolormesh(x.reshape(side, side), y.reshape(side, side), d.reshape(side, side))
    plt.colorbar(label="density")
    plt.savefig(out, dpi=120, bbox_inches="tight")
    plt.close()


def plot_traces(paths, out):
    plt.figure()
    for path in paths:
        _, rows = load(path)
        plt.plot(numeric(rows, 0), numeric(rows, 1), label=path.stem)
    plt.xlabel("epoch")
    plt.ylabel("cross-entropy (nats)")
    plt.legend()
    plt.savefig(out, dpi=120, bbox_inches="tight")
    plt.close()


def plot_curves(path, out, xlabel):
    header, rows = load(path)
    xs = numeric(rows, 0)
    plt.figure()
    for col in range(1, len(header)):
        plt.plot(xs, numeric(rows, col), label=header[col])
    plt.xlabel(xlabel)
    plt.legend(fontsize=6)
    plt.savefig(out, dpi=120, bbox_inches="tight")
    plt.close()


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    for arg in sys.argv[1:]:
        out_dir = Path(arg)
        made = []
        density = out_dir / "density.csv"
        if density.exists():
            _, rows = load(density)
            target = out_dir / "density.png"
            if len(rows[0]) >= 3:
                plot_density_2d(density, target)
            else:
                plot_density_1d(density, target)
            made.append(target)
        traces = sorted(out_dir.glob("trace*.csv"))
        if traces:
            target = out_dir / "traces.png"
            plot_traces(traces, target)
            made.append(target)
        for name, xlabel in [("tuning_curves.csv", "angle"), ("posterior.csv", "angle")]:
            path = out_dir / name
            if path.exists():
                target = path.with_suffix(".png")
                plot_curves(path, target, xlabel)
                made.append(target)
        for name in ("prior.csv", "posterior_010.csv", "posterior_020.csv",
                     "posterior_030.csv"):
            path = out_dir / name
            if path.exists():
                target = path.with_suffix(".png")
                plot_density_2d(path, target)
                made.append(target)
        print(f"{out_dir}: wrote {len(made)} plot(s)")


if __name__ == "__main__":
    main()
