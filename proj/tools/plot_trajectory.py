#!/usr/bin/env python3
"""Plot CSV artifacts written by `ssds train` and `ssds reproduce`.

    plot_trajectory.py runs/<id>/trajectory.csv -o trajectory.png
    plot_trajectory.py runs/<id>/u_norms_epoch_000030.csv --epsilon 0.03
    plot_trajectory.py figures/sgda_vs_ssds.csv

The plot type follows the CSV header.
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        sys.exit(f"{path}: no rows")
    return rows


def column(rows, name, kind=float):
    return [kind(r[name]) for r in rows]


def trajectory(rows, ax):
    epochs = column(rows, "epoch", int)
    for name in ("mean_loss", "lambda", "frac_u_within_budget"):
        ax.plot(epochs, column(rows, name), label=name)
    ax.set_xlabel("epoch")
    ax.legend()


def u_norms(rows, ax, epsilon):
    ax.hist(column(rows, "linf_norm"), bins=50)
    if epsilon is not None:
        ax.axvline(epsilon, color="k", linestyle="--", label=f"eps={epsilon}")
        ax.legend()
    ax.set_xlabel("||u||_inf")
    ax.set_ylabel("samples")


def comparison(rows, ax):
    for algo in sorted({r["algorithm"] for r in rows}):
        sub = [r for r in rows if r["algorithm"] == algo]
        epochs = column(sub, "epoch", int)
        ax.plot(epochs, column(sub, "test_clean_accuracy"), label=f"{algo} clean")
        ax.plot(epochs, column(sub, "test_fgsm_accuracy"), linestyle="--", label=f"{algo} fgsm")
    ax.set_xlabel("epoch")
    ax.set_ylabel("test accuracy")
    ax.legend()


def generic(rows, ax):
    keys = list(rows[0].keys())
    x = column(rows, keys[0])
    for name in keys[1:]:
        try:
            ax.plot(x, column(rows, name), label=name)
        except ValueError:
            continue
    ax.set_xlabel(keys[0])
    ax.legend()


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("csv")
    parser.add_argument("-o", "--out", help="output image (default: <csv>.png)")
    parser.add_argument("--epsilon", type=float, help="budget line for u-norm histograms")
    args = parser.parse_args()

    rows = read(args.csv)
    header = set(rows[0].keys())
    fig, ax = plt.subplots(figsize=(7, 4))
    if {"epoch", "mean_loss", "lambda"} <= header and "algorithm" not in header:
        trajectory(rows, ax)
    elif header == {"sample_id", "linf_norm"}:
        u_norms(rows, ax, args.epsilon)
    elif {"algorithm", "test_fgsm_accuracy"} <= header:
        comparison(rows, ax)
    else:
        generic(rows, ax)
    ax.set_title(args.csv)
    fig.tight_layout()
    fig.savefig(args.out or args.csv + ".png", dpi=120)


if __name__ == "__main__":
    main()
