#!/usr/bin/env python3
"""Plots a loss curve and/or a bench table.

    python3 docs/plot_results.py --curve model.sage.curve.csv --bench bench.csv --out figs/
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def plot_curve(path, out):
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(df.epoch, df.train_loss, label="train")
    ax.plot(df.epoch, df.val_loss, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("Huber loss (s)")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "loss_curve.png", dpi=150)


def plot_bench(path, out):
    df = pd.read_csv(path)
    g = df.groupby(["rate", "solver", "replan"]).mean(numeric_only=True).reset_index()
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.5))
    for (solver, replan), part in g.groupby(["solver", "replan"]):
        label = f"{solver}/{replan}"
        axes[0].plot(part.rate, part.mean_travel_time, marker="o", label=label)
        axes[1].plot(part.rate, part.mean_evals, marker="o", label=label)
        axes[2].plot(part.rate, part.mean_step_ms, marker="o", label=label)
    for ax, name in zip(axes, ["mean travel time (s)", "evaluations per solve", "mean step (ms)"]):
        ax.set_xlabel("arrival rate (veh/h)")
        ax.set_ylabel(name)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "bench.png", dpi=150)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--curve")
    ap.add_argument("--bench")
    ap.add_argument("--out", default=".")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.curve:
        plot_curve(args.curve, out)
    if args.bench:
        plot_bench(args.bench, out)


if __name__ == "__main__":
    main()
