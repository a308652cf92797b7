"""Verification harness: exact ratio curves, Monte-Carlo runs, CSV reports.

Exact curves come straight from the closed-form cost functionals; the
Monte-Carlo path executes the sampled strategies and compares realized
costs against them.  Reports are deterministic given the seed, and the
merge of sample statistics is order independent (sums, not sequences).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, TextIO

import numpy as np

from .instance import Instance
from .profile import Profile, validate_prudent

RNG_ALGORITHM = "numpy-pcg64"


@dataclass
class SimReport:
    """Ratio curve plus optional Monte-Carlo statistics for one profile."""

    grid: np.ndarray
    opt: np.ndarray
    exact_cost: np.ndarray
    exact_ratio: np.ndarray
    max_ratio: float
    argmax_time: float
    verdicts: tuple[tuple[str, bool], ...]
    mc_samples: int = 0
    mc_mean: Optional[np.ndarray] = None
    mc_stderr: Optional[np.ndarray] = None
    rng_algorithm: str = ""


def default_grid(
    inst: Instance, points_per_interval: int, profile: Optional[Profile] = None
) -> np.ndarray:
    """Evaluation grid: breakpoints, piece endpoints, uniform fill, tail.

    Contains 0 and every intersection time exactly, and probes past the
    last breakpoint to catch asymptotic behavior.
    """
    if points_per_interval < 2:
        raise ValueError("need at least two points per interval")
    knots = {0.0}
    knots.update(inst.s)
    if profile is not None:
        for piece in profile.pieces:
            knots.add(piece.t0)
            if math.isfinite(piece.t1):
                knots.add(piece.t1)
    tail = 3.0 * inst.s[-1] if inst.k >= 1 else 10.0
    knots.add(max(tail, max(knots)))
    knots = sorted(knots)
    parts = [np.asarray(knots)]
    for a, b in zip(knots[:-1], knots[1:]):
        parts.append(np.linspace(a, b, points_per_interval))
    return np.unique(np.concatenate(parts))


def _structural_verdicts(profile: Profile, ts: np.ndarray) -> tuple[tuple[str, bool], ...]:
    probs = profile.eval_grid(ts)
    sum_ok = bool(np.max(np.abs(probs.sum(axis=1) - 1.0)) <= 1e-12)
    major_ok = bool((np.diff(np.cumsum(probs, axis=1), axis=0) <= 1e-9).all())
    verdicts = [("sum_to_one", sum_ok), ("majorization", major_ok)]
    if profile.segments is not None:
        verdicts.append(("prudent", validate_prudent(profile).passed))
    return tuple(verdicts)


def run_exact(profile: Profile, grid: Sequence[float]) -> SimReport:
    """Deterministic report: per-time ratio of expected cost to the optimum."""
    grid = np.asarray(sorted(grid), dtype=float)
    ratios = np.array([r for _, r in profile.ratio_curve(grid.tolist())])
    exact_cost = profile.total_cost_grid(grid)
    opt = np.array([profile.inst.opt_cost(t) for t in grid])
    finite = np.isfinite(ratios)
    if finite.any():
        arg = int(np.argmax(np.where(finite, ratios, -np.inf)))
        max_ratio, argmax_time = float(ratios[arg]), float(grid[arg])
    else:
        max_ratio, argmax_time = math.inf, float(grid[0])
    return SimReport(
        grid=grid,
        opt=opt,
        exact_cost=exact_cost,
        exact_ratio=ratios,
        max_ratio=max_ratio,
        argmax_time=argmax_time,
        verdicts=_structural_verdicts(profile, grid),
    )


def realized_cost_batch(inst: Instance, times: np.ndarray, tau: float) -> np.ndarray:
    """Realized additive cost at one stop time for many sampled trajectories."""
    n = times.shape[0]
    b = np.asarray(inst.buys)
    r = np.asarray(inst.rents)
    entered = (times <= tau).sum(axis=1)
    padded = np.hstack([np.zeros((n, 1)), times, np.full((n, 1), math.inf)])
    clipped = np.minimum(padded, tau)
    durations = clipped[:, 1:] - clipped[:, :-1]
    return b[entered] + durations @ r


def run_monte_carlo(
    profile: Profile, grid: Sequence[float], samples: int, seed: int
) -> SimReport:
    """Exact report augmented with sampled-strategy cost statistics."""
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    report = run_exact(profile, grid)
    rng = np.random.default_rng(seed)
    us = rng.random(samples)
    times = profile.transition_times_batch(us)
    means = np.empty(report.grid.size)
    stderrs = np.zeros(report.grid.size)
    for gi, tau in enumerate(report.grid):
        costs = realized_cost_batch(profile.inst, times, float(tau))
        means[gi] = costs.mean()
        if samples > 1:
            stderrs[gi] = costs.std(ddof=1) / math.sqrt(samples)
    return replace(
        report,
        mc_samples=samples,
        mc_mean=means,
        mc_stderr=stderrs,
        rng_algorithm=RNG_ALGORITHM,
    )


def write_csv(report: SimReport, stream: TextIO) -> None:
    """One row per grid point; flagged ratios print as the literal inf."""
    stream.write("t,opt,exact_cost,ratio,mc_mean,mc_stderr\n")
    for i, t in enumerate(report.grid):
        ratio = report.exact_ratio[i]
        cells = [
            f"{t:.12g}",
            f"{report.opt[i]:.12g}",
            f"{report.exact_cost[i]:.12g}",
            "inf" if math.isinf(ratio) else f"{ratio:.12g}",
        ]
        if report.mc_samples:
            cells += [f"{report.mc_mean[i]:.12g}", f"{report.mc_stderr[i]:.12g}"]
        else:
            cells += ["", ""]
        stream.write(",".join(cells) + "\n")
