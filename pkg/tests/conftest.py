"""Shared generators for randomized sweeps.

Instances are generated from their geometry: pick strictly increasing
breakpoints and rent drops, then derive the buying costs so the
intersection times land exactly on the breakpoints.  Costs are scaled
so the largest one is max_cost.
"""

from __future__ import annotations

import numpy as np

from multislope import Instance, normalize


def random_instance(
    rng: np.random.Generator,
    k_lo: int = 1,
    k_hi: int = 8,
    zero_last_rent: bool = True,
    zero_first_buy: bool = True,
    max_cost: float = 10.0,
    s_lo: float = 0.3,
    s_hi: float = 5.0,
) -> Instance:
    k = int(rng.integers(k_lo, k_hi + 1))
    raw = 0.05 + rng.uniform(0.0, 1.0, size=k)
    s = s_lo + (s_hi - s_lo) * np.cumsum(raw) / np.sum(raw)
    drops = rng.uniform(0.1, 1.0, size=k)
    r_last = 0.0 if zero_last_rent else rng.uniform(0.1, 1.0)
    rents = r_last + np.concatenate([np.cumsum(drops[::-1])[::-1], [0.0]])
    b0 = 0.0 if zero_first_buy else rng.uniform(0.05, 1.0)
    buys = b0 + np.concatenate([[0.0], np.cumsum(s * drops)])
    scale = max_cost / max(buys.max(), rents.max())
    inst = normalize([(b * scale, r * scale) for b, r in zip(buys, rents)])
    assert inst.k == k
    return inst


def inject_dominated(rng: np.random.Generator, inst: Instance) -> list[tuple[float, float]]:
    """Slope list with extra strictly-dominated slopes shuffled in."""
    slopes = [(sl.buy, sl.rent) for sl in inst.slopes]
    extras = []
    for _ in range(int(rng.integers(1, 4))):
        i = int(rng.integers(0, inst.k + 1))
        extras.append(
            (inst.buys[i] + rng.uniform(0.01, 1.0), inst.rents[i] + rng.uniform(0.01, 1.0))
        )
    combined = slopes + extras
    rng.shuffle(combined)
    return [tuple(pair) for pair in combined]


def oracle_instance(rng: np.random.Generator, zero_last_rent=True) -> Instance:
    """Small instance with bounded horizon, cheap enough for step-1e-6 runs."""
    return random_instance(
        rng,
        k_lo=1,
        k_hi=4,
        zero_last_rent=zero_last_rent,
        s_lo=0.4,
        s_hi=3.0,
    )
