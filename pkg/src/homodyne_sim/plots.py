"""Figure rendering for sweep tables and trajectories.

The CLI writes full-precision CSV first; these helpers turn the same
tables into quick-look PNGs saved next to them.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_sweep(
    path: Path,
    x: Sequence[float],
    curves: dict[str, Sequence[float]],
    *,
    xlabel: str,
    ylabel: str,
    title: str,
    logy: bool = False,
) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    styles = ["-", "--", "-.", ":"]
    for (label, ys), style in zip(curves.items(), styles * 4):
        ax.plot(x, ys, style, label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trajectory(
    path: Path,
    lambda_t: np.ndarray,
    population: np.ndarray,
    margin: np.ndarray,
    *,
    title: str,
) -> Path:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.2, 5.4), sharex=True)
    ax1.plot(lambda_t, population)
    ax1.set_ylabel(r"$\langle n_{\pm 1}\rangle$")
    ax1.set_title(title)
    ax1.grid(alpha=0.3)
    ax2.plot(lambda_t, margin)
    ax2.axhline(0.0, color="gray", lw=0.8)
    ax2.set_xlabel(r"$\lambda t$")
    ax2.set_ylabel("criterion margin")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_histogram(
    path: Path,
    outcomes_by_setting: dict[str, np.ndarray],
    *,
    title: str,
) -> Path:
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, outcomes in outcomes_by_setting.items():
        ax.hist(outcomes, bins=80, histtype="step", density=True, label=label)
    ax.set_xlabel("outcome")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
