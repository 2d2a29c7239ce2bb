#!/usr/bin/env python3
"""Render the CSVs produced by the sylgl CLI.

Looks for convergence.csv / convergence_w.csv / sweep.csv / mismatch.csv in
the given directory and draws whatever it finds. Non-contractual helper: the
CSVs are the interface, this script is just a convenience.

    python3 scripts/plot_results.py OUT_DIR [--save PREFIX]
"""

import argparse
import csv
import math
import os
import sys
from collections import defaultdict


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def fnum(s):
    if s == "-inf":
        return -math.inf
    if s == "inf":
        return math.inf
    return float(s)


def plot_convergence(plt, directory, save):
    rows = read_csv(os.path.join(directory, "convergence.csv"))
    by_mode = defaultdict(lambda: ([], [], []))
    for r in rows:
        sweep, mode = int(r["sweep"]), int(r["mode"])
        by_mode[mode][0].append(sweep)
        by_mode[mode][1].append(fnum(r["stat_err"]))
        by_mode[mode][2].append(fnum(r["opt_err"]))
    fig, ax = plt.subplots()
    colors = ["tab:red", "tab:blue", "tab:green", "tab:orange"]
    for mode, (sweeps, stat, opt) in sorted(by_mode.items()):
        c = colors[(mode - 1) % len(colors)]
        ax.plot(sweeps, stat, color=c, label=f"mode {mode} statistical")
        ax.plot(sweeps, opt, color=c, linestyle=":", label=f"mode {mode} optimization")
    ax.set_xlabel("sweep")
    ax.set_ylabel("log relative Frobenius error")
    ax.legend()
    ax.set_title("convergence")
    if save:
        fig.savefig(save + "_convergence.png", dpi=150, bbox_inches="tight")


def plot_sweep(plt, directory, save):
    rows = read_csv(os.path.join(directory, "sweep.csv"))
    acc = defaultdict(lambda: defaultdict(list))  # mode -> lambda -> [fpr+fnr]
    for r in rows:
        acc[int(r["mode"])][float(r["lambda"])].append(float(r["fpr"]) + float(r["fnr"]))
    fig, ax = plt.subplots()
    for mode, series in sorted(acc.items()):
        lams = sorted(series)
        mean = [sum(series[l]) / len(series[l]) for l in lams]
        ax.plot(lams, mean, marker="o", label=f"mode {mode}")
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("FPR + FNR (mean over seeds)")
    ax.legend()
    ax.set_title("support recovery")
    if save:
        fig.savefig(save + "_sweep.png", dpi=150, bbox_inches="tight")


def plot_mismatch(plt, directory, save):
    rows = read_csv(os.path.join(directory, "mismatch.csv"))
    acc = defaultdict(lambda: defaultdict(list))
    for r in rows:
        acc[int(r["mode"])][float(r["lambda"])].append(float(r["mcc"]))
    fig, ax = plt.subplots()
    for mode, series in sorted(acc.items()):
        lams = sorted(series)
        mean = [sum(series[l]) / len(series[l]) for l in lams]
        ax.plot(lams, mean, marker="o", label=f"mode {mode}")
    ax.set_xscale("log")
    ax.set_xlabel("lambda")
    ax.set_ylabel("MCC (mean over seeds)")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    ax.set_title("recovery under the configured generator")
    if save:
        fig.savefig(save + "_mismatch.png", dpi=150, bbox_inches="tight")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory")
    ap.add_argument("--save", help="write PNGs with this path prefix instead of showing")
    args = ap.parse_args()

    import matplotlib

    if args.save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    drawn = False
    if os.path.exists(os.path.join(args.directory, "convergence.csv")):
        plot_convergence(plt, args.directory, args.save)
        drawn = True
    if os.path.exists(os.path.join(args.directory, "sweep.csv")):
        plot_sweep(plt, args.directory, args.save)
        drawn = True
    if os.path.exists(os.path.join(args.directory, "mismatch.csv")):
        plot_mismatch(plt, args.directory, args.save)
        drawn = True
    if not drawn:
        sys.exit(f"no sylgl CSVs found in {args.directory}")
    if not args.save:
        plt.show()


if __name__ == "__main__":
    main()
