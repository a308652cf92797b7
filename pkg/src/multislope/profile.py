"""Randomized profiles over slopes, stored in closed form.

A profile assigns each time t a probability vector over the instance's
slopes.  Every profile built here is piecewise exponential: on each time
piece, each slope's probability is a constant plus a sum of
``coeff * exp(rate * t)`` terms.  That makes the expected buying cost,
rental rate, and accumulated total cost exactly computable, with no
numerical quadrature anywhere on the evaluation path.

Two construction routes produce profiles:

* prudent segments, where exactly two consecutive slopes are active and
  the higher one follows ``a + gamma * exp(lam * t)``;
* general per-slope exponential sums, needed by the decomposition
  solver whose recombined profiles may have many active slopes.

A profile is turned into an executable strategy by a single uniform
draw U: the transition into state i happens at the first time the
total probability mass on states >= i reaches U.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .instance import Instance, parse_instance

_SNAP = 1e-12


@dataclass(frozen=True)
class ExpSum:
    """``const + sum(coeff * exp(rate * t))`` with distinct nonzero rates."""

    const: float
    terms: tuple[tuple[float, float], ...] = ()

    def value(self, t: float) -> float:
        return self.const + sum(c * math.exp(r * t) for c, r in self.terms)

    def values(self, ts: np.ndarray) -> np.ndarray:
        out = np.full(np.shape(ts), self.const, dtype=float)
        for c, r in self.terms:
            out += c * np.exp(r * ts)
        return out

    def slope(self, t: float) -> float:
        return sum(c * r * math.exp(r * t) for c, r in self.terms)

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral over [t0, t1]."""
        acc = self.const * (t1 - t0)
        for c, r in self.terms:
            acc += (c / r) * (math.exp(r * t1) - math.exp(r * t0))
        return acc

    def integrals_from(self, t0: float, ts: np.ndarray) -> np.ndarray:
        out = self.const * (ts - t0)
        for c, r in self.terms:
            out += (c / r) * (np.exp(r * ts) - math.exp(r * t0))
        return out

    @property
    def is_constant(self) -> bool:
        return not self.terms


def exp_sum(const: float, terms: Sequence[tuple[float, float]] = ()) -> ExpSum:
    """Build an :class:`ExpSum`, merging equal rates and dropping zeros."""
    merged: dict[float, float] = {}
    c0 = float(const)
    for coeff, rate in terms:
        if rate == 0.0:
            c0 += coeff
        else:
            merged[rate] = merged.get(rate, 0.0) + coeff
    kept = tuple(sorted((c, r) for r, c in merged.items() if c != 0.0))
    return ExpSum(c0, kept)


def exp_sum_add(*parts: ExpSum) -> ExpSum:
    terms = [t for p in parts for t in p.terms]
    return exp_sum(sum(p.const for p in parts), terms)


def exp_sum_scale(es: ExpSum, factor: float) -> ExpSum:
    return exp_sum(es.const * factor, [(c * factor, r) for c, r in es.terms])


_ZERO = ExpSum(0.0)
_ONE = ExpSum(1.0)


@dataclass(frozen=True)
class Segment:
    """One prudent piece: slope ``hi`` is being bought from slope ``hi - 1``.

    On [t0, t1] the probability of slope ``hi`` is ``a + gamma * exp(lam * t)``
    and slope ``hi - 1`` carries the complement; all other slopes are idle.
    ``t1`` may be ``inf`` for a converged tail.
    """

    t0: float
    t1: float
    hi: int
    a: float
    gamma: float
    lam: float

    def prob_hi(self, t: float) -> float:
        return self.a + self.gamma * math.exp(self.lam * t)

    def time_prob_reaches(self, p: float) -> float:
        """Time at which prob_hi equals p, or inf if never after t0."""
        if self.gamma == 0.0:
            return self.t0 if self.a >= p else math.inf
        arg = (p - self.a) / self.gamma
        if arg <= 0.0:
            return math.inf
        t = math.log(arg) / self.lam
        if t < self.t0 - _SNAP:
            return math.inf
        return max(t, self.t0)

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "t1": None if math.isinf(self.t1) else self.t1,
            "hi": self.hi,
            "a": self.a,
            "gamma": self.gamma,
            "lambda": self.lam,
        }


@dataclass(frozen=True)
class Piece:
    """General piece: explicit exponential sum per slope on [t0, t1)."""

    t0: float
    t1: float
    probs: tuple[ExpSum, ...]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a structural check with the first violating location."""

    check: str
    passed: bool
    violation_time: Optional[float] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class Profile:
    """A randomized profile for one instance, covering all of [0, inf).

    ``pieces`` are contiguous and the last one extends to infinity.
    ``segments`` is retained when the profile was built from prudent
    segments and drives the compact serialization; ``terminal_slope``
    names the pure tail slope, or None if the profile never finishes
    buying (possible when the cheapest rent is positive).
    """

    inst: Instance
    pieces: tuple[Piece, ...]
    segments: Optional[tuple[Segment, ...]] = None
    terminal_slope: Optional[int] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.inst.k + 1
        if not self.pieces:
            raise ValueError("profile needs at least one piece")
        prev_end = 0.0
        for piece in self.pieces:
            if len(piece.probs) != n:
                raise ValueError("piece probability vector length mismatch")
            if abs(piece.t0 - prev_end) > 1e-9:
                raise ValueError(f"pieces not contiguous at t={piece.t0}")
            if not piece.t1 > piece.t0:
                raise ValueError("piece interval must have positive length")
            prev_end = piece.t1
        if not math.isinf(self.pieces[-1].t1):
            raise ValueError("last piece must extend to infinity")

    # -- construction -------------------------------------------------

    @classmethod
    def from_segments(
        cls,
        inst: Instance,
        segments: Sequence[Segment],
        terminal_slope: Optional[int],
    ) -> "Profile":
        """Assemble a prudent profile from buying segments plus a pure tail."""
        n = inst.k + 1
        pieces = []
        for seg in segments:
            if seg.t1 <= seg.t0:
                continue
            probs = [_ZERO] * n
            probs[seg.hi] = exp_sum(seg.a, [(seg.gamma, seg.lam)])
            probs[seg.hi - 1] = exp_sum(1.0 - seg.a, [(-seg.gamma, seg.lam)])
            pieces.append(Piece(seg.t0, seg.t1, tuple(probs)))
        if terminal_slope is not None:
            start = pieces[-1].t1 if pieces else 0.0
            probs = [_ZERO] * n
            probs[terminal_slope] = _ONE
            pieces.append(Piece(start, math.inf, tuple(probs)))
        return cls(
            inst=inst,
            pieces=tuple(pieces),
            segments=tuple(segments),
            terminal_slope=terminal_slope,
        )

    @classmethod
    def constant(cls, inst: Instance, slope_index: int = 0) -> "Profile":
        """Profile that sits on one slope forever."""
        probs = [_ZERO] * (inst.k + 1)
        probs[slope_index] = _ONE
        return cls(
            inst=inst,
            pieces=(Piece(0.0, math.inf, tuple(probs)),),
            segments=(),
            terminal_slope=slope_index,
        )

    def with_instance(self, inst: Instance) -> "Profile":
        """Rebind the same probability functions to another instance.

        Used by the rent-shift reduction: the probabilities are reused
        unchanged while costs are recomputed from the new rents.
        """
        if inst.k != self.inst.k:
            raise ValueError("instance must have the same number of slopes")
        return replace(self, inst=inst, _cache={})

    # -- cached internals ----------------------------------------------

    @property
    def _starts(self) -> list[float]:
        if "starts" not in self._cache:
            self._cache["starts"] = [p.t0 for p in self.pieces]
        return self._cache["starts"]

    @property
    def _rent_funcs(self) -> list[ExpSum]:
        if "rent" not in self._cache:
            r = self.inst.rents
            self._cache["rent"] = [
                exp_sum_add(*(exp_sum_scale(es, ri) for es, ri in zip(p.probs, r)))
                for p in self.pieces
            ]
        return self._cache["rent"]

    @property
    def _rent_cum(self) -> list[float]:
        """Integral of the rent rate from 0 to each piece start."""
        if "rent_cum" not in self._cache:
            cum = [0.0]
            for piece, es in zip(self.pieces[:-1], self._rent_funcs[:-1]):
                cum.append(cum[-1] + es.integral(piece.t0, piece.t1))
            self._cache["rent_cum"] = cum
        return self._cache["rent_cum"]

    def _survivor(self, i: int) -> list[ExpSum]:
        """Per piece, the probability mass on slopes >= i."""
        key = ("survivor", i)
        if key not in self._cache:
            self._cache[key] = [exp_sum_add(*p.probs[i:]) for p in self.pieces]
        return self._cache[key]

    def _piece_index(self, t: float) -> int:
        return max(0, bisect_right(self._starts, t) - 1)

    # -- evaluation ----------------------------------------------------

    def eval(self, t: float) -> np.ndarray:
        """Probability vector over slopes at time t."""
        if t != t or t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        piece = self.pieces[self._piece_index(t)]
        return np.array([es.value(t) for es in piece.probs])

    def eval_grid(self, ts: Sequence[float]) -> np.ndarray:
        """Probability matrix of shape (len(ts), k + 1)."""
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, self.inst.k + 1))
        idx = np.searchsorted(self._starts, ts, side="right") - 1
        np.clip(idx, 0, len(self.pieces) - 1, out=idx)
        for pi in np.unique(idx):
            mask = idx == pi
            for j, es in enumerate(self.pieces[pi].probs):
                out[mask, j] = es.values(ts[mask])
        return out

    def buy_cost(self, t: float) -> float:
        """Expected buying spend accumulated by time t."""
        return float(np.dot(self.eval(t), self.inst.buys))

    def rent_rate(self, t: float) -> float:
        """Expected rental rate at time t."""
        return float(np.dot(self.eval(t), self.inst.rents))

    def total_cost(self, t: float) -> float:
        """Expected total cost by time t: buys plus integrated rent, exactly."""
        if t != t or t < 0.0:
            raise ValueError(f"time must be nonnegative, got {t}")
        i = self._piece_index(t)
        rent_part = self._rent_cum[i] + self._rent_funcs[i].integral(self.pieces[i].t0, t)
        return self.buy_cost(t) + rent_part

    def buy_cost_grid(self, ts: Sequence[float]) -> np.ndarray:
        return self.eval_grid(ts) @ np.asarray(self.inst.buys)

    def rent_rate_grid(self, ts: Sequence[float]) -> np.ndarray:
        return self.eval_grid(ts) @ np.asarray(self.inst.rents)

    def total_cost_grid(self, ts: Sequence[float]) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = self.buy_cost_grid(ts)
        idx = np.searchsorted(self._starts, ts, side="right") - 1
        np.clip(idx, 0, len(self.pieces) - 1, out=idx)
        for pi in np.unique(idx):
            mask = idx == pi
            piece = self.pieces[pi]
            out[mask] += self._rent_cum[pi] + self._rent_funcs[pi].integrals_from(
                piece.t0, ts[mask]
            )
        return out

    def ratio_curve(self, grid: Sequence[float]) -> list[tuple[float, float]]:
        """Per-time competitive ratio ``total_cost / opt_cost``.

        At t = 0 with a free first slope the ratio is the limit
        ``rent_rate(0) / r_0`` when the profile starts purely on slope 0
        and ``inf`` otherwise (flagged value, never an exception).
        """
        grid = list(grid)
        if not grid:
            raise ValueError("grid must be nonempty")
        if any(t < 0 for t in grid) or any(
            grid[i] > grid[i + 1] for i in range(len(grid) - 1)
        ):
            raise ValueError("grid must be sorted and nonnegative")
        out = []
        for t in grid:
            opt = self.inst.opt_cost(t)
            if opt > 0.0:
                out.append((t, self.total_cost(t) / opt))
                continue
            p = self.eval(0.0)
            r0 = self.inst.rents[0]
            if p[0] >= 1.0 - _SNAP:
                out.append((t, self.rent_rate(0.0) / r0 if r0 > 0.0 else 1.0))
            else:
                out.append((t, math.inf))
        return out

    # -- strategy sampling ----------------------------------------------

    def transition_time(self, i: int, u: float) -> float:
        """First time the mass on slopes >= i reaches u (inf if never)."""
        survivors = self._survivor(i)
        for pi, piece in enumerate(self.pieces):
            es = survivors[pi]
            if es.value(piece.t0) >= u:
                return piece.t0
            end = piece.t1 if math.isfinite(piece.t1) else piece.t0 + 1e3
            if es.value(end) >= u:
                return _invert_monotone(es, u, piece.t0, end)
        return math.inf

    def transition_times(self, u: float) -> tuple[float, ...]:
        """Transition times t_1 <= ... <= t_k for one uniform draw u."""
        if not 0.0 < u < 1.0:
            raise ValueError(f"u must lie strictly inside (0, 1), got {u}")
        out = []
        prev = 0.0
        for i in range(1, self.inst.k + 1):
            t = max(prev, self.transition_time(i, u))
            out.append(t)
            prev = t
        return tuple(out)

    def transition_times_batch(self, us: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`transition_times`; returns shape (len(us), k)."""
        us = np.asarray(us, dtype=float)
        n, k = us.size, self.inst.k
        out = np.full((n, k), math.inf)
        order = np.argsort(us, kind="stable")
        su = us[order]
        for i in range(1, k + 1):
            survivors = self._survivor(i)
            col = np.full(n, math.inf)
            ptr = 0
            for pi, piece in enumerate(self.pieces):
                if ptr >= n:
                    break
                es = survivors[pi]
                end = piece.t1 if math.isfinite(piece.t1) else piece.t0 + 1e3
                v_start, v_end = es.value(piece.t0), es.value(end)
                stop = np.searchsorted(su, v_end, side="right")
                if stop <= ptr:
                    continue
                block = su[ptr:stop]
                ts = _invert_monotone_vec(es, block, piece.t0, end)
                ts[block <= v_start] = piece.t0
                col[ptr:stop] = ts
                ptr = stop
            out[order, i - 1] = col
        return np.maximum.accumulate(out, axis=1)


def _invert_monotone(es: ExpSum, target: float, lo: float, hi: float) -> float:
    """Solve es(t) = target on [lo, hi] for a nondecreasing es."""
    if len(es.terms) == 1:
        coeff, rate = es.terms[0]
        if abs(coeff) >= 1e-14:
            arg = (target - es.const) / coeff
            if arg > 0.0:
                return min(max(math.log(arg) / rate, lo), hi)
            return lo
    if es.is_constant:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if es.value(mid) >= target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    return hi


def _invert_monotone_vec(es: ExpSum, targets: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if len(es.terms) == 1:
        coeff, rate = es.terms[0]
        if abs(coeff) >= 1e-14:
            arg = (targets - es.const) / coeff
            out = np.full(targets.shape, lo)
            pos = arg > 0.0
            out[pos] = np.clip(np.log(arg[pos]) / rate, lo, hi)
            return out
    if es.is_constant:
        return np.full(targets.shape, lo)
    los = np.full(targets.shape, lo)
    his = np.full(targets.shape, hi)
    for _ in range(100):
        mids = 0.5 * (los + his)
        above = es.values(mids) >= targets
        his[above] = mids[above]
        los[~above] = mids[~above]
    return his


@dataclass(frozen=True)
class Strategy:
    """Executable randomized strategy: one uniform draw fixes all transitions."""

    profile: Profile
    rule: str = (
        "draw U uniformly in (0, 1); enter state i at the first time the "
        "probability mass on states >= i reaches U"
    )

    def transition_times(self, u: float) -> tuple[float, ...]:
        return self.profile.transition_times(u)


def sample_strategy(profile: Profile, u: float) -> tuple[float, ...]:
    """Transition times of the strategy realization for one uniform draw."""
    return profile.transition_times(u)


def realized_cost(inst: Instance, transition_times: Sequence[float], tau: float) -> float:
    """Additive-model cost of one deterministic trajectory stopped at tau.

    Rent accrues per state occupied; incremental buy payments telescope
    to the buying cost of the highest state entered by tau.
    """
    if tau != tau or tau < 0.0:
        raise ValueError(f"stop time must be nonnegative, got {tau}")
    times = list(transition_times)
    if any(times[i] > times[i + 1] for i in range(len(times) - 1)):
        raise ValueError("transition times must be nondecreasing")
    b, r = inst.buys, inst.rents
    pad = [0.0, *times, math.inf]
    m = sum(1 for t in times if t <= tau)
    rent = sum(
        r[i] * (min(pad[i + 1], tau) - min(pad[i], tau)) for i in range(inst.k + 1)
    )
    return b[m] + rent


# -- validators ---------------------------------------------------------


def validation_grid(profile: Profile, points_per_piece: int = 1000) -> np.ndarray:
    """Dense check grid: piece endpoints, instance breakpoints, uniform fill.

    The infinite tail piece is probed over a finite horizon; tail behavior
    is monotone, so endpoints plus dense sampling suffice.
    """
    knots = {0.0}
    knots.update(profile.inst.s)
    last_finite = 0.0
    for piece in profile.pieces:
        knots.add(piece.t0)
        if math.isfinite(piece.t1):
            knots.add(piece.t1)
            last_finite = max(last_finite, piece.t1)
    horizon = 3.0 * max(last_finite, profile.inst.s[-1], 1.0)
    knots.add(horizon)
    knots = sorted(knots)
    parts = [np.asarray(knots)]
    for a, b in zip(knots[:-1], knots[1:]):
        parts.append(np.linspace(a, b, points_per_piece, endpoint=False)[1:])
    return np.unique(np.concatenate(parts))


def validate_prudent(profile: Profile, points_per_piece: int = 1000) -> ValidationReport:
    """Check the structural rules a well-formed profile must satisfy.

    (a) at most two active slopes and they are consecutive, (b) the
    cumulative mass on cheap-rent slopes never decreases (no purchase
    rollback), (c) continuity across piece boundaries.
    """
    ts = validation_grid(profile, points_per_piece)
    probs = profile.eval_grid(ts)

    active = probs > 1e-9
    counts = active.sum(axis=1)
    spans = np.where(
        active.any(axis=1),
        (active.shape[1] - 1 - np.argmax(active[:, ::-1], axis=1)) - np.argmax(active, axis=1),
        0,
    )
    bad = (counts > 2) | (spans + 1 > counts)
    if bad.any():
        t = float(ts[int(np.argmax(bad))])
        return ValidationReport("prudent", False, t, "more than two or non-consecutive active slopes")

    cum = np.cumsum(probs, axis=1)
    increases = np.diff(cum, axis=0) > 1e-9
    if increases.any():
        row = int(np.argmax(increases.any(axis=1)))
        return ValidationReport(
            "prudent", False, float(ts[row + 1]), "cumulative low-slope mass increased"
        )

    for left, right in zip(profile.pieces[:-1], profile.pieces[1:]):
        t = left.t1
        lv = np.array([es.value(t) for es in left.probs])
        rv = np.array([es.value(t) for es in right.probs])
        if np.max(np.abs(lv - rv)) > 1e-9:
            return ValidationReport("prudent", False, t, "discontinuity at piece boundary")

    return ValidationReport("prudent", True)


def validate_tight(
    profile: Profile, c: float, tol: float, points_per_piece: int = 1000
) -> ValidationReport:
    """Check that spending tracks c times the offline optimum.

    Verified wherever the last slope is not yet fully bought; past that
    point a profile accrues no further cost relative to the optimum.
    """
    if c < 1.0:
        raise ValueError(f"competitive ratio must be >= 1, got {c}")
    ts = validation_grid(profile, points_per_piece)
    probs = profile.eval_grid(ts)
    mask = probs[:, -1] < 1.0 - 1e-9
    if not mask.any():
        return ValidationReport("tight", True)
    ts = ts[mask]
    total = profile.total_cost_grid(ts)
    opt = np.array([profile.inst.opt_cost(t) for t in ts])
    err = np.abs(total - c * opt)
    if (err > tol).any():
        row = int(np.argmax(err > tol))
        return ValidationReport(
            "tight", False, float(ts[row]),
            f"|total - c*opt| = {err[row]:.3e} exceeds {tol:g}",
        )
    return ValidationReport("tight", True)


# -- serialization -------------------------------------------------------


def profile_to_dict(profile: Profile) -> dict:
    """JSON document for a profile.

    Prudent profiles serialize as buying segments; recombined profiles
    from the decomposition solver need the general per-slope form and
    use a parallel "pieces" key.
    """
    doc: dict = {"instance": profile.inst.to_dict()}
    if profile.segments is not None:
        doc["segments"] = [seg.to_dict() for seg in profile.segments]
    else:
        doc["pieces"] = [
            {
                "t0": p.t0,
                "t1": None if math.isinf(p.t1) else p.t1,
                "probs": [
                    {"const": es.const, "terms": [list(term) for term in es.terms]}
                    for es in p.probs
                ],
            }
            for p in profile.pieces
        ]
    doc["terminal_slope"] = profile.terminal_slope
    return doc


def parse_profile(doc: dict) -> Profile:
    inst, _ = parse_instance(doc["instance"])
    terminal = doc.get("terminal_slope")
    if "segments" in doc:
        segments = tuple(
            Segment(
                t0=float(sd["t0"]),
                t1=math.inf if sd["t1"] is None else float(sd["t1"]),
                hi=int(sd["hi"]),
                a=float(sd["a"]),
                gamma=float(sd["gamma"]),
                lam=float(sd["lambda"]),
            )
            for sd in doc["segments"]
        )
        if not segments and terminal is None:
            terminal = 0
        return Profile.from_segments(inst, segments, terminal)
    pieces = tuple(
        Piece(
            t0=float(pd["t0"]),
            t1=math.inf if pd["t1"] is None else float(pd["t1"]),
            probs=tuple(
                exp_sum(es["const"], [tuple(t) for t in es["terms"]]) for es in pd["probs"]
            ),
        )
        for pd in doc["pieces"]
    )
    return Profile(inst=inst, pieces=pieces, terminal_slope=terminal)


def dump_profile(profile: Profile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(profile_to_dict(profile), fh, indent=2)
        fh.write("\n")


def load_profile(path: str) -> Profile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile(json.load(fh))
