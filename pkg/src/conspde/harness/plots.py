"""Static figures written next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_series(path: Path, times, series: dict[str, np.ndarray], title: str = "") -> Path:
    """One panel per diagnostic; rows of a 2-d array are ensemble members."""
    names = list(series)
    fig, axes = plt.subplots(len(names), 1, figsize=(6, 1.8 * len(names)), sharex=True, squeeze=False)
    for ax, name in zip(axes[:, 0], names):
        y = np.atleast_2d(series[name])
        for row in y:
            ax.plot(times, row, lw=0.8, alpha=0.7)
        ax.set_ylabel(name)
    axes[-1, 0].set_xlabel("t")
    if title:
        axes[0, 0].set_title(title)
    return _save(fig, path)


def plot_profiles(path: Path, x, states, times) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    for s, t in zip(states, times):
        ax.plot(x, s, lw=1, label=f"t={t:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel("rho")
    if len(times) <= 8:
        ax.legend(fontsize=7)
    return _save(fig, path)


def plot_coupling(path: Path, times, distances, bounds) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    for d in np.atleast_2d(distances):
        ax.semilogy(times, np.maximum(d, 1e-300), lw=0.6, alpha=0.5, color="C0")
    ax.semilogy(times, np.atleast_2d(bounds)[0], "k--", lw=1, label="C(t) d(0)")
    ax.set_xlabel("t")
    ax.set_ylabel("L1 distance")
    ax.legend()
    return _save(fig, path)


def plot_two_point(path: Path, horizons, estimates, lo, hi) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3))
    est = np.asarray(estimates)
    ax.errorbar(horizons, est, yerr=[est - np.asarray(lo), np.asarray(hi) - est], fmt="o-", capsize=3)
    ax.set_xlabel("t")
    ax.set_ylabel("P(d(t) > delta)")
    return _save(fig, path)
