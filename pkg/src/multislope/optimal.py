"""Optimal strategy construction for additive instances.

A tight profile spends at exactly c times the offline marginal rate
until the last slope is fully bought.  While slope i is being bought
and the offline optimum sits on slope j, the buy probability follows

    dp/dt + p * (r_i - r_{i-1}) / (b_i - b_{i-1})
        = (c * r_j - r_{i-1}) / (b_i - b_{i-1}),

whose solution is one exponential segment.  Chaining segments across
the two event kinds (the offline optimum crossing a breakpoint; a slope
finishing) either completes a profile or hits a state where the tight
budget no longer covers the current rent, which proves c infeasible.
Bisection on c then finds the optimal ratio to any precision.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .decompose import solve_decompose
from .instance import Instance
from .profile import Profile, Segment

_SNAP = 1e-12

NEGATIVE_BUY_RATE = "negative-buy-rate"
PROBABILITY_DECREASE = "probability-decrease"
TAIL_DIVERGENCE = "tail-divergence"

CROSSED_BREAKPOINT = "crossed-s"
FINISHED_SLOPE = "finished-slope"
CONVERGED_TAIL = "converged-tail"


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    index: int


@dataclass(frozen=True)
class FeasibilityTrace:
    """Outcome of one tight-construction attempt at a fixed ratio."""

    inst: Instance
    c: float
    feasible: bool
    segments: tuple[Segment, ...]
    events: tuple[Event, ...]
    failure: Optional[tuple[float, str]] = None
    terminal_slope: Optional[int] = None

    def __bool__(self) -> bool:
        return self.feasible

    def profile(self) -> Profile:
        if not self.feasible:
            raise ValueError(f"no tight profile exists at c = {self.c}")
        return Profile.from_segments(self.inst, self.segments, self.terminal_slope)


def segment_solution(
    inst: Instance, i: int, j: int, c: float, boundary: tuple[float, float]
) -> Segment:
    """Exponential segment for buying slope i while the optimum is slope j.

    Pure algebra: the steady state is (c*r_j - r_{i-1}) / (r_i - r_{i-1}),
    the rate is (r_{i-1} - r_i) / (b_i - b_{i-1}), and the coefficient
    matches the boundary value.  Feasibility is judged by the caller.
    """
    t_b, p_b = boundary
    r, b = inst.rents, inst.buys
    a = (c * r[j] - r[i - 1]) / (r[i] - r[i - 1])
    lam = (r[i - 1] - r[i]) / (b[i] - b[i - 1])
    gamma = 0.0 if abs(p_b - a) <= _SNAP else (p_b - a) * math.exp(-lam * t_b)
    return Segment(t0=t_b, t1=math.inf, hi=i, a=a, gamma=gamma, lam=lam)


def _initial_state(inst: Instance, c: float) -> tuple[int, float]:
    """Slope being bought at t = 0 and its starting probability.

    Tightness pins the initial expected buy spend to ``c * opt_cost(0)``,
    which is 0 exactly when the first slope is free; a paid first slope
    lets the profile start with mass already on higher slopes.  Returns
    ``(k + 1, 1.0)`` when the budget already covers the last slope.
    """
    budget = c * inst.buys[0]
    b = inst.buys
    if budget >= b[-1]:
        return inst.k + 1, 1.0
    i = bisect_right(b, budget)
    return i, (budget - b[i - 1]) / (b[i] - b[i - 1])


def feasible(inst: Instance, c: float) -> FeasibilityTrace:
    """Try to construct the tight c-competitive profile.

    The construction fails exactly when, at some event boundary, the
    tight budget ``c * r_j`` falls below the current expected rent, so
    the buy probability would have to decrease (a purchase rollback).
    """
    if c < 1.0:
        raise ValueError(f"competitive ratio must be >= 1, got {c}")
    k = inst.k
    s, r = inst.s, inst.rents
    i, p_b = _initial_state(inst, c)
    j, t_b = 0, 0.0
    segments: list[Segment] = []
    events: list[Event] = []

    def done(feas, failure=None, terminal=None):
        return FeasibilityTrace(
            inst=inst,
            c=c,
            feasible=feas,
            segments=tuple(segments),
            events=tuple(events),
            failure=failure,
            terminal_slope=terminal,
        )

    while True:
        if i > k:
            return done(True, terminal=k)
        while j < k and s[j + 1] <= t_b + _SNAP:
            j += 1
            events.append(Event(t_b, CROSSED_BREAKPOINT, j))
        seg = segment_solution(inst, i, j, c, (t_b, p_b))
        if p_b < seg.a - _SNAP:
            reason = TAIL_DIVERGENCE if j >= k and r[k] > 0.0 else NEGATIVE_BUY_RATE
            return done(False, failure=(t_b, reason))
        if seg.gamma == 0.0:
            if j >= k:
                segments.append(seg)
                events.append(Event(t_b, CONVERGED_TAIL, i))
                return done(True, terminal=None)
            end = s[j + 1]
            segments.append(Segment(t_b, end, i, seg.a, 0.0, seg.lam))
            t_b = end
            continue
        x = seg.time_prob_reaches(1.0)
        next_s = s[j + 1] if j < k else math.inf
        if x <= next_s + _SNAP:
            if x > t_b:
                segments.append(Segment(t_b, x, i, seg.a, seg.gamma, seg.lam))
            events.append(Event(x, FINISHED_SLOPE, i))
            i += 1
            t_b, p_b = x, 0.0
        else:
            p_end = min(max(seg.prob_hi(next_s), 0.0), 1.0)
            segments.append(Segment(t_b, next_s, i, seg.a, seg.gamma, seg.lam))
            if p_end >= 1.0 - _SNAP:
                events.append(Event(next_s, FINISHED_SLOPE, i))
                i += 1
                t_b, p_b = next_s, 0.0
            else:
                t_b, p_b = next_s, p_end


def bisect_ratio(
    inst: Instance,
    eps: float,
    is_feasible: Callable[[float], bool],
    hi: float,
) -> float:
    """Smallest feasible ratio to within eps, given a feasible upper bound.

    Maintains an infeasible lower and feasible upper bracket and returns
    the upper end.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if is_feasible(1.0):
        return 1.0
    lo = 1.0 - 1e-12
    while hi - lo > eps:
        mid = 0.5 * (lo + hi)
        if is_feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def solve_optimal(inst: Instance, eps: float) -> tuple[float, Profile]:
    """Optimal competitive ratio to within eps, with its tight profile.

    Bisects between 1 and the decomposition solver's certified bound,
    which is always feasible; runs O(k log(1/eps)) segment builds.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if inst.k == 0:
        return 1.0, Profile.constant(inst, 0)

    best: dict[float, FeasibilityTrace] = {}

    def probe(c: float) -> bool:
        trace = feasible(inst, c)
        if trace.feasible:
            best[c] = trace
        return trace.feasible

    hi = solve_decompose(inst).bound
    if not probe(hi):
        # the bound is feasible by construction; allow a whisker of
        # floating-point headroom before giving up
        hi *= 1.0 + 1e-12
        if not probe(hi):
            raise RuntimeError(f"certified bound {hi} unexpectedly infeasible")
    c_star = bisect_ratio(inst, eps, probe, hi)
    return c_star, best[c_star].profile()


def euler_feasible_oracle(inst: Instance, c: float, step: float) -> bool:
    """Feasibility verdict by first-order integration of the spending rule.

    Independent of the closed-form segments: steps
    ``p <- p + h * (c*r_j - r_{i-1} - p*(r_i - r_{i-1})) / (b_i - b_{i-1})``
    through the same event logic.  Within a phase the recurrence is
    affine with constant coefficients, so chunks of steps are evaluated
    with a vectorized running product of the per-step multiplier; a unit
    test pins the chunked form to the literal step loop.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if c < 1.0:
        raise ValueError(f"competitive ratio must be >= 1, got {c}")
    k = inst.k
    s, r, b = inst.s, inst.rents, inst.buys
    i, p = _initial_state(inst, c)
    j, t = 0, 0.0
    chunk = 1 << 16
    while True:
        if i > k:
            return True
        while j < k and s[j + 1] <= t + _SNAP:
            j += 1
        d_b = b[i] - b[i - 1]
        lam = (r[i - 1] - r[i]) / d_b
        a = (c * r[j] - r[i - 1]) / (r[i] - r[i - 1])
        if p < a - _SNAP:
            return False
        if j >= k:
            # no further spending-rate changes: the verdict is algebraic
            if abs(p - a) <= _SNAP:
                return True
            for m in range(i + 1, k + 1):
                if c * r[k] < r[m - 1] - _SNAP * (r[m - 1] - r[m]):
                    return False
            return True
        phase_end = s[j + 1]
        n_steps = max(0, math.ceil((phase_end - t) / step))
        mult = 1.0 + step * lam
        offset = p - a
        crossed = False
        done_steps = 0
        while done_steps < n_steps:
            m = min(chunk, n_steps - done_steps)
            powers = np.cumprod(np.full(m, mult))
            traj = a + offset * powers
            hit = np.nonzero(traj >= 1.0)[0]
            if hit.size:
                done_steps += int(hit[0]) + 1
                crossed = True
                break
            offset *= powers[-1]
            done_steps += m
        if crossed:
            t = t + done_steps * step
            i += 1
            p = 0.0
        else:
            p = min(max(a + offset, 0.0), 1.0)
            t = phase_end
            if p >= 1.0 - _SNAP:
                i += 1
                p = 0.0
