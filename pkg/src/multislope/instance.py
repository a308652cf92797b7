"""Data model for multislope rent-or-buy instances.

An instance is a set of states ("slopes"), each with a one-time buying
cost and a rental rate.  Holding state i for t time units costs
``buy_i + rent_i * t``.  After normalization the slopes are ordered by
strictly increasing buying cost and strictly decreasing rental rate,
and ``s[i]`` is the time at which slopes i-1 and i cost the same, so
the offline optimum is the lower envelope of the slope lines with
breakpoints exactly at the s values.
"""

from __future__ import annotations

import json
import math
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence


class InvalidInstanceError(ValueError):
    """The slope data cannot form a valid instance."""


class UnreachableBudgetError(ValueError):
    """No finite time reaches the requested offline cost."""


class InstanceFormatError(ValueError):
    """An instance file or document is structurally malformed."""


class CoincidentIntersectionWarning(UserWarning):
    """Two intersection times coincide; a slope is optimal only at a point."""


@dataclass(frozen=True)
class Slope:
    """One rent-or-buy option: pay ``buy`` once, then ``rent`` per time unit."""

    buy: float
    rent: float

    def __post_init__(self):
        for name in ("buy", "rent"):
            try:
                v = float(getattr(self, name))
            except (TypeError, ValueError):
                raise InvalidInstanceError(
                    f"slope {name} must be a number, got {getattr(self, name)!r}"
                ) from None
            if not math.isfinite(v) or v < 0.0:
                raise InvalidInstanceError(f"slope {name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)

    def cost(self, t: float) -> float:
        return self.buy + self.rent * t


@dataclass(frozen=True)
class Instance:
    """A normalized multislope instance.

    ``slopes`` are ordered with strictly increasing buys and strictly
    decreasing rents; ``s`` holds the intersection times, with
    ``s[0] = 0`` and ``s[i] = (b_i - b_{i-1}) / (r_{i-1} - r_i)``.
    Construct via :func:`normalize`; direct construction validates that
    the data is already in normalized form.  Immutable and safe to
    share across threads.
    """

    slopes: tuple[Slope, ...]
    s: tuple[float, ...]

    def __post_init__(self):
        if not self.slopes:
            raise InvalidInstanceError("instance needs at least one slope")
        b, r = self.buys, self.rents
        for i in range(1, len(b)):
            if not (b[i] > b[i - 1] and r[i] < r[i - 1]):
                raise InvalidInstanceError(
                    f"slopes not normalized at index {i}: need strictly increasing "
                    f"buys and strictly decreasing rents"
                )
        expected = intersection_times(self.slopes)
        if len(self.s) != len(expected) or any(
            abs(a - b_) > 1e-9 * max(1.0, abs(b_)) for a, b_ in zip(self.s, expected)
        ):
            raise InvalidInstanceError("intersection times inconsistent with slopes")

    @property
    def k(self) -> int:
        """Highest slope index (the instance has k+1 slopes)."""
        return len(self.slopes) - 1

    @property
    def buys(self) -> tuple[float, ...]:
        return tuple(sl.buy for sl in self.slopes)

    @property
    def rents(self) -> tuple[float, ...]:
        return tuple(sl.rent for sl in self.slopes)

    def opt_cost(self, t: float) -> float:
        """Offline optimum: cheapest single slope for a game ending at t."""
        if t != t or t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        if math.isinf(t):
            last = self.slopes[-1]
            return last.buy if last.rent == 0.0 else math.inf
        return self.slopes[self.opt_slope(t)].cost(t)

    def opt_slope(self, t: float) -> int:
        """Index of the offline-optimal slope at time t.

        At an intersection time both neighbors are optimal; this returns
        the higher index.  Use :meth:`opt_slope_tie_low` for the
        low-index convention.
        """
        if t != t or t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        if math.isinf(t):
            return self.k
        return bisect_right(self.s, t) - 1

    def opt_slope_tie_low(self, t: float) -> int:
        """Like :meth:`opt_slope`, but resolves ties to the lower index."""
        if t != t or t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        if math.isinf(t):
            return self.k
        return max(0, bisect_left(self.s, t) - 1)

    def opt_inverse(self, budget: float) -> float:
        """Earliest time t with ``opt_cost(t) == budget``.

        The offline cost is continuous and strictly increasing while the
        current rent is positive, so the inverse is unique except on the
        flat tail (rent 0), where the infimum time is returned.
        """
        b, r = self.buys, self.rents
        if budget != budget or budget < b[0]:
            raise ValueError(f"budget {budget} below minimum offline cost {b[0]}")
        kink_costs = [b[i] + r[i] * self.s[i] for i in range(len(b))]
        i = bisect_right(kink_costs, budget) - 1
        if r[i] == 0.0:
            if budget > b[i]:
                raise UnreachableBudgetError(
                    f"budget {budget} exceeds maximum offline cost {b[i]}"
                )
            return self.s[i]
        return (budget - b[i]) / r[i]

    def to_dict(self) -> dict:
        return {"slopes": [{"buy": sl.buy, "rent": sl.rent} for sl in self.slopes]}


@dataclass(frozen=True)
class NonAdditiveInstance:
    """Instance under the non-additive transition convention.

    Entering state j always costs the full ``b_j``, regardless of the
    state being left (the general transition-cost model reduces to this).
    """

    base: Instance

    FULL_PRICE_ON_ENTRY = "every transition into state j costs b_j in full"

    @property
    def k(self) -> int:
        return self.base.k


def intersection_times(slopes: Sequence[Slope]) -> tuple[float, ...]:
    """s values for already-ordered slopes: s_0 = 0, s_i from the pair i-1, i."""
    s = [0.0]
    for i in range(1, len(slopes)):
        s.append((slopes[i].buy - slopes[i - 1].buy) / (slopes[i - 1].rent - slopes[i].rent))
    return tuple(s)


def dominated_indices(slopes: Sequence[Slope]) -> list[int]:
    """Positions of slopes that can never beat some other listed slope.

    Slope j is dominated if another slope i has ``b_i <= b_j`` and
    ``r_i <= r_j``; exact duplicates keep the earlier-listed copy.
    """
    dropped = []
    for j, sj in enumerate(slopes):
        for i, si in enumerate(slopes):
            if i == j:
                continue
            if si.buy <= sj.buy and si.rent <= sj.rent:
                if (si.buy, si.rent) != (sj.buy, sj.rent) or i < j:
                    dropped.append(j)
                    break
    return dropped


def normalize(raw: Iterable[Slope | tuple[float, float]]) -> Instance:
    """Build a normalized :class:`Instance` from slopes in any order.

    Dominated slopes are removed, survivors are sorted by buying cost,
    and the intersection times are computed.  Coincident intersection
    times are permitted (the middle slope is optimal only at a point)
    and flagged with :class:`CoincidentIntersectionWarning`; decreasing
    intersection times mean some slope is nowhere optimal, which the
    model does not admit, so that raises :class:`InvalidInstanceError`.
    """
    slopes = [sl if isinstance(sl, Slope) else Slope(*sl) for sl in raw]
    if not slopes:
        raise InvalidInstanceError("instance needs at least one slope")
    dropped = set(dominated_indices(slopes))
    kept = sorted(
        (sl for i, sl in enumerate(slopes) if i not in dropped),
        key=lambda sl: sl.buy,
    )
    s = intersection_times(kept)
    for i in range(2, len(s)):
        if s[i] < s[i - 1]:
            raise InvalidInstanceError(
                f"slope {i - 1} is never optimal: intersection times decrease "
                f"({s[i - 1]} then {s[i]})"
            )
    if any(s[i] == s[i - 1] for i in range(2, len(s))):
        warnings.warn(
            "coincident intersection times; some slope is optimal only at a point",
            CoincidentIntersectionWarning,
            stacklevel=2,
        )
    return Instance(slopes=tuple(kept), s=s)


def parse_instance(doc: object) -> tuple[Instance, list[int]]:
    """Parse the instance document format and normalize.

    Returns the instance and the original positions of slopes dropped as
    dominated.  Structural problems (wrong shape, empty slope list) raise
    :class:`InstanceFormatError`; bad values raise
    :class:`InvalidInstanceError`.
    """
    if not isinstance(doc, dict) or "slopes" not in doc:
        raise InstanceFormatError('instance document must be an object with a "slopes" key')
    entries = doc["slopes"]
    if not isinstance(entries, list) or not entries:
        raise InstanceFormatError('"slopes" must be a nonempty list')
    slopes = []
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict) or "buy" not in entry or "rent" not in entry:
            raise InstanceFormatError(f'slope {pos} must be an object with "buy" and "rent"')
        slopes.append(Slope(entry["buy"], entry["rent"]))
    dropped = dominated_indices(slopes)
    return normalize(slopes), dropped


def load_instance(path: str) -> tuple[Instance, list[int]]:
    """Load an instance JSON file; see :func:`parse_instance`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return parse_instance(doc)
