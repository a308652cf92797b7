"""Strategy construction by reduction to classical two-slope instances.

An instance whose cheapest rent is zero splits into k classical
rent-or-buy instances, one per consecutive slope pair, each intersecting
exactly at the parent's breakpoint.  Recombining each classical
randomized strategy yields a profile whose competitive ratio is at most
e/(e-1); when the cheapest rent is positive, shifting all rents down by
it sharpens the bound to (e - r_k/r_0)/(e-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .instance import Instance, Slope
from .profile import Piece, Profile, Segment, exp_sum, exp_sum_add, exp_sum_scale

_E1 = math.e - 1.0


def split(inst: Instance) -> list[Instance]:
    """Two-slope sub-instances of a normalized instance with zero final rent.

    Sub-instance i rents at the rate drop ``r_{i-1} - r_i`` and buys at
    the price step ``b_i - b_{i-1}``, so its slopes intersect at the
    parent's ``s_i``.
    """
    if inst.rents[-1] != 0.0:
        raise ValueError("cheapest rent must be zero; apply reduce_rents first")
    if inst.k < 1:
        raise ValueError("need at least two slopes to split")
    subs = []
    b, r = inst.buys, inst.rents
    for i in range(1, inst.k + 1):
        slopes = (Slope(0.0, r[i - 1] - r[i]), Slope(b[i] - b[i - 1], 0.0))
        subs.append(Instance(slopes=slopes, s=(0.0, inst.s[i])))
    return subs


def classical_profile(sub: Instance) -> Profile:
    """The optimal randomized profile for one classical sub-instance.

    The buy probability is ``(exp(t * r_0 / b_1) - 1) / (e - 1)``,
    which starts at 0, reaches exactly 1 at the intersection time, and
    is clamped to 1 afterwards.
    """
    rate = sub.rents[0] / sub.buys[1]
    seg = Segment(t0=0.0, t1=sub.s[1], hi=1, a=-1.0 / _E1, gamma=1.0 / _E1, lam=rate)
    return Profile.from_segments(sub, (seg,), terminal_slope=1)


def combine(inst: Instance, classics: list[Profile]) -> Profile:
    """Recombine classical profiles into a profile for the full instance.

    Slope i carries the difference of consecutive buy probabilities;
    the differences telescope, so the result always sums to one.  More
    than two slopes can be active at once, so the result is stored in
    the general per-slope exponential form rather than as prudent
    segments.
    """
    k = inst.k
    if len(classics) != k:
        raise ValueError(f"expected {k} classical profiles, got {len(classics)}")
    rates = []
    ends = []
    for p in classics:
        seg = p.segments[0]
        rates.append(seg.lam)
        ends.append(seg.t1)
    if any(ends[i] > ends[i + 1] for i in range(k - 1)):
        raise RuntimeError("sub-instance intersection times out of order (split bug)")

    breaks = sorted({0.0, *ends})
    pieces = []
    for lo, hi_t in zip(breaks, breaks[1:] + [math.inf]):
        if hi_t <= lo:
            continue
        # buy probability of sub-instance i on this piece: either done (1)
        # or the exponential still in progress
        sub_prob = [
            exp_sum(1.0) if ends[i] <= lo else exp_sum(-1.0 / _E1, [(1.0 / _E1, rates[i])])
            for i in range(k)
        ]
        probs = [exp_sum_add(exp_sum(1.0), exp_sum_scale(sub_prob[0], -1.0))]
        for m in range(1, k):
            probs.append(exp_sum_add(sub_prob[m - 1], exp_sum_scale(sub_prob[m], -1.0)))
        probs.append(sub_prob[k - 1])
        pieces.append(Piece(lo, hi_t, tuple(probs)))
    return Profile(inst=inst, pieces=tuple(pieces), terminal_slope=k)


def reduce_rents(inst: Instance) -> tuple[Instance, float]:
    """Shift all rents down by the cheapest one.

    Any profile for the reduced instance, replayed on the original,
    accrues exactly ``shift * t`` extra cost by time t, and so does the
    offline optimum; the intersection times are unchanged.
    """
    shift = inst.rents[-1]
    if shift == 0.0:
        return inst, 0.0
    slopes = tuple(Slope(sl.buy, sl.rent - shift) for sl in inst.slopes)
    return Instance(slopes=slopes, s=inst.s), shift


@dataclass(frozen=True)
class DecomposeResult:
    profile: Profile
    bound: float


def solve_decompose(inst: Instance) -> DecomposeResult:
    """End-to-end decomposition solver with its certified ratio bound.

    The bound is e/(e-1) when the cheapest rent is zero, the sharpened
    (e - r_k/r_0)/(e-1) otherwise, and 1 for a single-slope instance.
    """
    if inst.k == 0:
        return DecomposeResult(Profile.constant(inst, 0), 1.0)
    reduced, shift = reduce_rents(inst)
    subs = split(reduced)
    classics = [classical_profile(sub) for sub in subs]
    profile = combine(reduced, classics)
    if shift > 0.0:
        profile = profile.with_instance(inst)
        bound = (math.e - inst.rents[-1] / inst.rents[0]) / _E1
    else:
        bound = math.e / _E1
    return DecomposeResult(profile, bound)
