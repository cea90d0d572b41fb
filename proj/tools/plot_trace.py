#!/usr/bin/env python3
"""Plot the enclosure bands of a trace CSV written by `stlmon trace`."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    names = [h[:-3] for h in header[2::2]]
    return names, rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("-o", "--output", default="trace.png")
    args = parser.parse_args()

    names, rows = load(args.csv)
    fig, axes = plt.subplots(len(names), 1, sharex=True, squeeze=False, figsize=(8, 2.5 * len(names)))
    for i, name in enumerate(names):
        ax = axes[i][0]
        # Each row bounds the variable over [t_lo, t_hi]; draw it as a box.
        for row in rows:
            t0, t1, lo, hi = row[0], row[1], row[2 + 2 * i], row[3 + 2 * i]
            ax.fill_between([t0, t1], [lo, lo], [hi, hi], color="tab:blue", alpha=0.4, linewidth=0)
        ax.set_ylabel(name)
    axes[-1][0].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)


if __name__ == "__main__":
    main()
