"""Figure rendering for the report path.

Renders the cost-curve data already computed by the simulation harness;
nothing here feeds back into the solvers.  All figures go to files via
the Agg backend, so no display is required.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .instance import Instance
from .profile import Profile
from .sim import SimReport


def save_ratio_figure(
    report: SimReport, path: str, bound: Optional[float] = None, title: str = ""
) -> None:
    """Exact ratio curve with Monte-Carlo means and error bars when present."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    finite = np.isfinite(report.exact_ratio)
    ax.plot(report.grid[finite], report.exact_ratio[finite], label="exact ratio", lw=1.8)
    if report.mc_samples:
        safe = report.opt > 0
        ax.errorbar(
            report.grid[safe],
            report.mc_mean[safe] / report.opt[safe],
            yerr=4.0 * report.mc_stderr[safe] / report.opt[safe],
            fmt=".",
            ms=3,
            alpha=0.6,
            label=f"MC mean / opt ({report.mc_samples} samples)",
        )
    if bound is not None:
        ax.axhline(bound, color="crimson", ls="--", lw=1.0, label=f"bound {bound:.6g}")
    ax.set_xlabel("stop time t")
    ax.set_ylabel("expected cost / offline optimum")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_profile_figure(profile: Profile, grid: Sequence[float], path: str, title: str = "") -> None:
    """Stacked state-occupancy probabilities over time."""
    ts = np.asarray(grid, dtype=float)
    probs = profile.eval_grid(ts)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.stackplot(
        ts,
        probs.T,
        labels=[f"slope {i}" for i in range(probs.shape[1])],
        alpha=0.85,
    )
    ax.set_xlabel("time t")
    ax.set_ylabel("state probability")
    ax.set_ylim(0.0, 1.0)
    if title:
        ax.set_title(title)
    ax.legend(loc="center right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_opt_figure(inst: Instance, grid: Sequence[float], path: str, title: str = "") -> None:
    """Slope cost lines with the offline optimum drawn as the lower envelope."""
    ts = np.asarray(grid, dtype=float)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for i, sl in enumerate(inst.slopes):
        ax.plot(ts, sl.buy + sl.rent * ts, ls="--", lw=0.8, alpha=0.7, label=f"slope {i}")
    opt = np.array([inst.opt_cost(t) for t in ts])
    ax.plot(ts, opt, color="black", lw=2.0, label="offline optimum")
    for s in inst.s[1:]:
        if s <= ts[-1]:
            ax.axvline(s, color="gray", lw=0.5, alpha=0.5)
    ax.set_xlabel("stop time t")
    ax.set_ylabel("cost")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
