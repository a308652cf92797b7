import math

import numpy as np
import pytest

from conftest import random_instance
from multislope import (
    NonAdditiveInstance,
    build_schedule,
    doubling_cost,
    expected_ratio_estimate,
    normalize,
)

E = math.e
CLASSICAL = NonAdditiveInstance(normalize([(0, 1), (1, 0)]))


def opt_at(inst, t):
    return inst.opt_cost(t)


class TestBuildSchedule:
    def test_classical_zero_draw(self):
        sch = build_schedule(CLASSICAL, 0.0, E, horizon=5.0)
        assert sch.budgets[0] == pytest.approx(1.0)  # opt(s_1) / e^0
        assert sch.times[0] == pytest.approx(1.0)
        assert sch.states[0] == 0  # boundary resolves to the cheaper state
        # next budget e exceeds the flat maximum: state 1 is pinned
        assert math.isinf(sch.times[1]) and sch.states[1] == 1

    def test_tie_at_breakpoint_takes_lower_state(self):
        inst = NonAdditiveInstance(normalize([(0, 2), (2, 1), (6, 0)]))
        sch = build_schedule(inst, 0.0, 1.5, horizon=10.0)
        assert sch.times[0] == pytest.approx(2.0) and sch.states[0] == 0
        assert sch.times[1] == pytest.approx(4.0) and sch.states[1] == 1

    def test_states_nondecreasing_and_first_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            inst = NonAdditiveInstance(
                random_instance(rng, zero_last_rent=bool(rng.integers(2)))
            )
            sch = build_schedule(inst, float(rng.random()), E, horizon=4 * inst.base.s[-1])
            assert sch.states[0] == 0
            assert all(a <= b for a, b in zip(sch.states, sch.states[1:]))
            assert all(a <= b for a, b in zip(sch.times, sch.times[1:]))

    def test_states_are_offline_optimal_at_their_end_times(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            base = random_instance(rng, zero_last_rent=bool(rng.integers(2)))
            inst = NonAdditiveInstance(base)
            sch = build_schedule(inst, float(rng.random()), E, horizon=3 * base.s[-1])
            for tau, state in zip(sch.times, sch.states):
                if math.isinf(tau):
                    assert state == base.k
                    continue
                line = base.buys[state] + base.rents[state] * tau
                assert line == pytest.approx(base.opt_cost(tau), abs=1e-9, rel=1e-9)

    def test_trivial_single_slope(self):
        inst = NonAdditiveInstance(normalize([(0.5, 2)]))
        sch = build_schedule(inst, 0.3, E, horizon=9.0)
        assert sch.states == (0,) and math.isinf(sch.times[0])
        assert doubling_cost(inst, sch, 4.0) == pytest.approx(0.5 + 2 * 4.0)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            build_schedule(CLASSICAL, 1.0, E, 1.0)
        with pytest.raises(ValueError):
            build_schedule(CLASSICAL, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            build_schedule(CLASSICAL, 0.5, E, -1.0)


class TestDoublingCost:
    def test_optimal_before_first_end(self):
        sch = build_schedule(CLASSICAL, 0.0, E, horizon=5.0)
        for tau in (0.1, 0.5, 0.99):
            assert doubling_cost(CLASSICAL, sch, tau) == pytest.approx(
                opt_at(CLASSICAL.base, tau)
            )

    def test_classical_after_switch(self):
        sch = build_schedule(CLASSICAL, 0.0, E, horizon=5.0)
        assert doubling_cost(CLASSICAL, sch, 2.0) == pytest.approx(2.0)

    def test_never_beats_offline(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            base = random_instance(rng, zero_last_rent=bool(rng.integers(2)))
            inst = NonAdditiveInstance(base)
            horizon = 3 * base.s[-1]
            sch = build_schedule(inst, float(rng.random()), E, horizon)
            for tau in rng.uniform(0, horizon, size=8):
                assert doubling_cost(inst, sch, float(tau)) >= opt_at(base, float(tau)) - 1e-9

    def test_per_draw_deterministic_bound(self):
        # cost <= sum of the offline optima at the begun iteration ends
        #      <= alpha/(alpha-1) times the last begun budget
        # (the last offline optimum itself can sit below its budget when
        # the budget overruns a flat tail, so the budget is the quantity
        # the geometric sum telescopes to)
        rng = np.random.default_rng(37)
        for alpha in (1.7, E, 2.4):
            for _ in range(15):
                base = random_instance(rng, zero_last_rent=bool(rng.integers(2)))
                inst = NonAdditiveInstance(base)
                horizon = 3 * base.s[-1]
                sch = build_schedule(inst, float(rng.random()), alpha, horizon)
                for tau in rng.uniform(0, horizon, size=5):
                    tau = float(tau)
                    cost = doubling_cost(inst, sch, tau)
                    begun = sum(
                        1 for prev in (0.0,) + sch.times[:-1] if prev <= tau
                    )
                    opts = [opt_at(base, t) for t in sch.times[:begun]]
                    assert cost <= sum(opts) + 1e-9
                    assert sum(opts) <= alpha / (alpha - 1.0) * sch.budgets[begun - 1] + 1e-9

    def test_rejects_stop_after_horizon(self):
        sch = build_schedule(CLASSICAL, 0.0, E, horizon=2.0)
        with pytest.raises(ValueError):
            doubling_cost(CLASSICAL, sch, 3.0)


class TestExpectedRatio:
    def test_growth_penalty_minimized_at_e(self):
        alphas = np.linspace(1.5, 4.0, 251)
        penalty = alphas / np.log(alphas)
        assert alphas[np.argmin(penalty)] == pytest.approx(E, abs=0.02)
        assert penalty.min() == pytest.approx(E, abs=1e-3)

    def test_classical_bound_at_e(self):
        rng = np.random.default_rng(41)
        mean, se = expected_ratio_estimate(CLASSICAL, E, 2.0, 100_000, rng)
        assert mean <= E + 4 * se

    def test_alpha_two_bound(self):
        rng = np.random.default_rng(43)
        mean, se = expected_ratio_estimate(CLASSICAL, 2.0, 2.0, 100_000, rng)
        assert mean <= 2.0 / math.log(2.0) + 4 * se

    def test_tiny_stop_time_is_optimal(self):
        rng = np.random.default_rng(47)
        mean, se = expected_ratio_estimate(CLASSICAL, E, 1e-6, 1000, rng)
        assert mean == pytest.approx(1.0, abs=1e-9)

    def test_matches_scalar_schedules(self):
        rng_inst = np.random.default_rng(53)
        for _ in range(6):
            base = random_instance(rng_inst, zero_last_rent=bool(rng_inst.integers(2)))
            inst = NonAdditiveInstance(base)
            tau = float(rng_inst.uniform(0.3, 2.5) * base.s[-1])
            seed = int(rng_inst.integers(1_000_000))
            n = 200
            mean_vec, _ = expected_ratio_estimate(inst, E, tau, n, np.random.default_rng(seed))
            xs = np.random.default_rng(seed).random(n)
            opt = opt_at(base, tau)
            costs = [
                doubling_cost(inst, build_schedule(inst, float(x), E, tau), tau) for x in xs
            ]
            assert mean_vec == pytest.approx(np.mean(costs) / opt, abs=1e-9)

    def test_parameter_validation(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError):
            expected_ratio_estimate(CLASSICAL, 1.0, 1.0, 10, rng)
        with pytest.raises(ValueError):
            expected_ratio_estimate(CLASSICAL, E, 1.0, 0, rng)
