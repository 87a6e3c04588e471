"""Figures for reports. Each figure is written as a PNG next to a CSV of its data.

matplotlib is imported on first use with the non-interactive Agg backend, so
the library itself never needs a display.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .metrics import vcal, vreg_curve
from .transcript import Transcript, require_binary


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _write_columns(path: Path, header: list[str], cols) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{float(v):.17g}" for v in row])


def vreg_curve_points(t: Transcript):
    """Piecewise-linear V-regret drawn with a break at every split point.

    Returns ``(v, value)`` with a NaN row between pieces so jumps stay visible.
    """
    a, b, A, B = vreg_curve(t)
    v = np.column_stack([a, b, np.full_like(a, np.nan)]).ravel()
    y = np.column_stack([A + B * a, A + B * b, np.full_like(a, np.nan)]).ravel()
    return v, y


def plot_vreg_curve(t: Transcript, stem, title: str | None = None) -> list[Path]:
    """V-regret as a function of the V-shape center, with the supremum marked."""
    require_binary(t)
    stem = Path(stem)
    v, y = vreg_curve_points(t)
    best = vcal(t)
    data = stem.with_suffix(".csv")
    keep = ~np.isnan(v)
    _write_columns(data, ["v", "vreg"], [v[keep], y[keep]])

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(v, y, color="tab:blue", lw=1.4)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.plot([best.v], [best.value], "o", color="tab:red", ms=4, label=f"VCal = {best.value:.4g}")
    ax.set_xlabel("V-shape center v")
    ax.set_ylabel("regret")
    ax.set_xlim(0.0, 1.0)
    ax.legend(frameon=False, loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    png = stem.with_suffix(".png")
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [png, data]


def reliability_points(t: Transcript, n_bins: int = 10):
    """Per-bin mean forecast, outcome frequency and count (equal-width bins)."""
    require_binary(t)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    idx = np.clip(np.digitize(t.predictions, edges[1:-1]), 0, n_bins - 1)
    n = np.bincount(idx, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_p = np.bincount(idx, weights=t.predictions, minlength=n_bins) / n
        freq = np.bincount(idx, weights=t.outcomes, minlength=n_bins) / n
    return mean_p, freq, n


def plot_reliability(t: Transcript, stem, n_bins: int = 10, title: str | None = None) -> list[Path]:
    stem = Path(stem)
    mean_p, freq, n = reliability_points(t, n_bins)
    keep = n > 0
    data = stem.with_suffix(".csv")
    _write_columns(data, ["mean_forecast", "outcome_frequency", "count"], [mean_p[keep], freq[keep], n[keep]])

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(3.6, 3.6))
    ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
    ax.plot(mean_p[keep], freq[keep], "o-", color="tab:blue", ms=4)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("mean forecast")
    ax.set_ylabel("outcome frequency")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    png = stem.with_suffix(".png")
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [png, data]


def plot_seed_metrics(rows: list[dict], metrics: list[str], stem, title: str | None = None) -> list[Path]:
    """One marker series per metric across seeds."""
    stem = Path(stem)
    seeds = np.array([r.get("seed", i) for i, r in enumerate(rows)], dtype=float)
    cols = [np.array([float(r[m]) for r in rows]) for m in metrics]
    data = stem.with_suffix(".csv")
    _write_columns(data, ["seed"] + list(metrics), [seeds] + cols)

    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for m, c in zip(metrics, cols):
        ax.plot(seeds, c, "o", ms=3, label=m)
    ax.set_xlabel("seed")
    ax.set_ylabel("value")
    ax.legend(frameon=False, fontsize=8, loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    png = stem.with_suffix(".png")
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [png, data]
