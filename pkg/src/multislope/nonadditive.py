"""Randomized doubling strategy for the non-additive model.

When every transition into state j costs the full ``b_j``, a geometric
budget ladder gives an e-competitive strategy: iteration j is allotted
budget ``B_j = opt(s_1) * alpha ** (j - 1 - x)`` with a single uniform
exponent draw x, runs until the time where the offline optimum reaches
``B_j``, and occupies the offline-optimal state of that end time (the
cheaper neighbor when the end time is exactly a breakpoint).  The
expected cost is at most ``alpha / ln(alpha)`` times the optimum, which
is minimized at ``alpha = e``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import Instance, NonAdditiveInstance, UnreachableBudgetError


@dataclass(frozen=True)
class DoublingSchedule:
    """Budget ladder realized for one exponent draw.

    Iteration j (1-based) spans ``(times[j-2], times[j-1]]`` with
    ``times[-1]`` treated as 0, and occupies ``states[j-1]``.  The last
    listed time is either strictly beyond the horizon, or infinite once
    the budget is unreachable (the schedule then pins the last state).
    """

    x: float
    alpha: float
    horizon: float
    budgets: tuple[float, ...]
    times: tuple[float, ...]
    states: tuple[int, ...]


def _inverse_or_clamp(inst: Instance, budget: float) -> float:
    """opt_inverse extended to the budgets a ladder can produce.

    Budgets below the startup cost map to time 0 (the iteration is
    vacuous: state 0 is already held); budgets above a flat-tail maximum
    map to infinity (nothing left to switch to).
    """
    if budget < inst.buys[0]:
        return 0.0
    try:
        return inst.opt_inverse(budget)
    except UnreachableBudgetError:
        return math.inf


def build_schedule(
    ninst: NonAdditiveInstance, x: float, alpha: float, horizon: float
) -> DoublingSchedule:
    """Realize the budget ladder for exponent draw x up to a horizon."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"exponent draw must lie in [0, 1), got {x}")
    if not alpha > 1.0:
        raise ValueError(f"growth factor must exceed 1, got {alpha}")
    if horizon < 0.0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    inst = ninst.base
    if inst.k == 0:
        return DoublingSchedule(x, alpha, horizon, (), (math.inf,), (0,))
    budgets, times, states = [], [], []
    budget = inst.opt_cost(inst.s[1]) * alpha**-x
    while True:
        tau = _inverse_or_clamp(inst, budget)
        budgets.append(budget)
        times.append(tau)
        states.append(inst.opt_slope_tie_low(tau))
        # extend strictly past the horizon so a stop exactly at an
        # iteration end still sees the next iteration it begins
        if tau > horizon or math.isinf(tau):
            return DoublingSchedule(
                x, alpha, horizon, tuple(budgets), tuple(times), tuple(states)
            )
        budget *= alpha


def doubling_cost(ninst: NonAdditiveInstance, schedule: DoublingSchedule, tau: float) -> float:
    """Realized non-additive cost of the schedule stopped at tau.

    Each begun iteration pays its state's full price on entry (skipped
    when the state did not change, which only lowers cost) plus rent for
    its span; iteration j's own cost never exceeds the offline optimum
    of its end time.
    """
    if not 0.0 <= tau <= schedule.horizon:
        raise ValueError(f"stop time {tau} outside [0, {schedule.horizon}]")
    b, r = ninst.base.buys, ninst.base.rents
    cost = 0.0
    prev_t = 0.0
    prev_state = -1
    for end, state in zip(schedule.times, schedule.states):
        if prev_t > tau:
            break
        if state > prev_state:
            cost += b[state]
        cost += r[state] * (min(end, tau) - prev_t)
        prev_t, prev_state = end, state
    return cost


def doubling_costs_batch(
    ninst: NonAdditiveInstance, alpha: float, tau: float, xs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Realized costs at tau for a batch of exponent draws, vectorized.

    Returns the per-draw costs and the budget of each draw's in-progress
    iteration (the quantity the geometric bound telescopes to).
    """
    if not alpha > 1.0:
        raise ValueError(f"growth factor must exceed 1, got {alpha}")
    inst = ninst.base
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    opt_tau = inst.opt_cost(tau)
    if inst.k == 0 or tau == 0.0:
        flat = np.full(n, inst.buys[0] + inst.rents[0] * tau)
        return flat, flat.copy()

    b = np.asarray(inst.buys)
    r = np.asarray(inst.rents)
    s = np.asarray(inst.s)
    kink_costs = b + r * s

    first = inst.opt_cost(inst.s[1]) * alpha ** -xs
    # enough rungs that every draw's ladder passes opt(tau)
    if opt_tau > np.min(first):
        depth = math.ceil(math.log(opt_tau / np.min(first)) / math.log(alpha)) + 2
    else:
        depth = 2
    budgets = first[:, None] * alpha ** np.arange(depth)[None, :]

    idx = np.clip(np.searchsorted(kink_costs, budgets, side="right") - 1, 0, inst.k)
    rate = r[idx]
    times = np.where(rate > 0.0, (budgets - b[idx]) / np.where(rate > 0.0, rate, 1.0), s[idx])
    times[(rate == 0.0) & (budgets > b[idx])] = math.inf
    times[budgets < b[0]] = 0.0
    states = np.clip(np.searchsorted(s, times, side="left") - 1, 0, inst.k)

    prev_times = np.hstack([np.zeros((n, 1)), times[:, :-1]])
    prev_states = np.hstack([np.full((n, 1), -1), states[:, :-1]])
    begun = prev_times <= tau
    spans = np.clip(np.minimum(times, tau) - np.minimum(prev_times, tau), 0.0, None)
    costs = np.where(begun & (states > prev_states), b[states], 0.0).sum(axis=1)
    costs += (r[states] * spans).sum(axis=1)
    current = budgets[np.arange(n), begun.sum(axis=1) - 1]
    return costs, current


def expected_ratio_estimate(
    ninst: NonAdditiveInstance,
    alpha: float,
    tau: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of cost(tau) / opt(tau).

    Draws the exponent independently per sample; the whole batch is
    evaluated vectorized over the budget ladder.
    """
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    costs, _ = doubling_costs_batch(ninst, alpha, tau, rng.random(samples))
    opt_tau = ninst.base.opt_cost(tau)
    ratios = costs / opt_tau if opt_tau > 0.0 else np.ones_like(costs)
    mean = float(np.mean(ratios))
    stderr = float(np.std(ratios, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr
