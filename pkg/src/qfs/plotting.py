"""Report figures rendered alongside the CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def save_gap_distribution(delta_mins, path: str | Path) -> None:
    """Histogram of minimum gaps with the cumulative curve overlaid."""
    vals = np.sort(np.asarray(delta_mins, dtype=float))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(vals, bins=min(30, max(5, vals.size // 5)), color="tab:orange", alpha=0.7)
    ax.set_xlabel(r"$\Delta_{\min}$")
    ax.set_ylabel("count")
    ax2 = ax.twinx()
    ax2.plot(vals, np.arange(1, vals.size + 1) / vals.size, color="purple", lw=2)
    ax2.set_ylabel("cumulative fraction", color="purple")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_coupling_distribution(j_values, mu: float, sigma: float, path: str | Path) -> None:
    vals = np.asarray(j_values, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(vals, bins=40, density=True, color="tab:blue", alpha=0.7, label="couplings")
    if sigma > 0:
        xs = np.linspace(vals.min(), vals.max(), 200)
        ax.plot(
            xs,
            np.exp(-0.5 * ((xs - mu) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi)),
            "r--",
            label=f"gaussian $\\mu$={mu:.3f}, $\\sigma$={sigma:.3f}",
        )
    ax.set_xlabel(r"$J_{pq}$")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_correlation_heatmap(bc: np.ndarray, path: str | Path, threshold: float = 0.10) -> None:
    shown = bc.copy()
    shown[shown < threshold] = 0.0
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(shown, vmin=0.0, vmax=1.0, cmap="inferno")
    ax.set_xlabel("class")
    ax.set_ylabel("class")
    fig.colorbar(im, ax=ax, label="Bhattacharyya coefficient")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_spectrum_trace(s_grid, e0, e1, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(s_grid, e0, label="$E_0(s)$")
    ax.plot(s_grid, e1, label="$E_1(s)$")
    ax.set_xlabel("s")
    ax.set_ylabel("energy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_fidelity_vs_tau(table: dict[float, list[float]], path: str | Path) -> None:
    """Median fidelity per annealing time with quartile bars."""
    taus = sorted(table)
    med = [np.median(table[t]) for t in taus]
    q1 = [np.percentile(table[t], 25) for t in taus]
    q3 = [np.percentile(table[t], 75) for t in taus]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(
        taus,
        med,
        yerr=[np.subtract(med, q1), np.subtract(q3, med)],
        fmt="o-",
        capsize=4,
    )
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel("median fidelity")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
