#!/usr/bin/env python3
"""Plot a sweep directory written by `sicaoi sweep` (sweep.csv, summary.json)."""
import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

PANELS = [
    ("P_s", "delivery probability", False),
    ("theta_norm", "normalized throughput", False),
    ("cbr", "channel busy ratio", False),
    ("ED_ms", "E[D] (ms)", True),
    ("EH_ms", "E[H] (ms)", True),
    ("Ebar_mJ", "energy per delivery (mJ)", True),
]


def load(path):
    df = pd.read_csv(path, comment="#")
    return df[df["mode"] == "analytic"], df[df["mode"] == "simulate"]


def metrics_figure(ana, sim, out):
    fig, axes = plt.subplots(2, 3, figsize=(13, 7))
    for ax, (col, label, logy) in zip(axes.flat, PANELS):
        if len(ana):
            ax.plot(ana["S_ms"], ana[col], "-", label="model")
        if len(sim):
            ax.errorbar(sim["S_ms"], sim[col], yerr=sim[col + "_ci"].fillna(0), fmt="o", ms=3, capsize=2,
                        label="simulation")
        ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("S (ms)")
        ax.set_ylabel(label)
        ax.grid(True, which="both", alpha=0.3)
    axes.flat[0].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=130)


def tradeoff_figure(ana, summary, out):
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(ana["Ebar_mJ"], ana["EH_ms"], "-o", ms=3)
    knee = summary.get("knee")
    if knee:
        ax.plot([knee["Ebar_mJ"]], [knee["EH_ms"]], "r*", ms=14, label=f"knee S={knee['S_ms']:.1f} ms")
        ax.legend()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("energy per delivery (mJ)")
    ax.set_ylabel("E[H] (ms)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=130)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("sweep_dir", type=Path)
    ap.add_argument("-o", "--out", type=Path, help="output directory (default: sweep_dir)")
    args = ap.parse_args()
    out = args.out or args.sweep_dir
    out.mkdir(parents=True, exist_ok=True)
    ana, sim = load(args.sweep_dir / "sweep.csv")
    summary_path = args.sweep_dir / "summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    metrics_figure(ana, sim, out / "metrics.png")
    written = ["metrics.png"]
    if len(ana):
        tradeoff_figure(ana, summary, out / "tradeoff.png")
        written.append("tradeoff.png")
    print("wrote " + ", ".join(str(out / w) for w in written))


if __name__ == "__main__":
    main()
