from __future__ import annotations

import numpy as np
import pytest

from stegopolicy import (
    ChainParams,
    Policy,
    cost_of,
    estimate_discounted,
    occupancy_of,
    reward_of,
    rollout,
)


class TestRollout:
    def test_deterministic_given_seed(self, attracted):
        a = rollout(attracted, Policy(0.6, 0.3), 200, seed=42)
        b = rollout(attracted, Policy(0.6, 0.3), 200, seed=42)
        assert np.array_equal(a, b)
        c = rollout(attracted, Policy(0.6, 0.3), 200, seed=43)
        assert not np.array_equal(a, c)

    def test_absorbing_at_zero(self, attracted):
        states = rollout(attracted, Policy(1.0, 1.0), 50, seed=1)
        assert (states[1:] == 0).all()

    def test_absorbing_at_one(self, attracted):
        states = rollout(attracted, Policy(0.0, 0.0), 50, seed=1)
        assert (states[1:] == 1).all()

    def test_horizon_validated(self, attracted):
        with pytest.raises(ValueError):
            rollout(attracted, Policy(0.5, 0.5), 0, seed=0)


class TestEstimateDiscounted:
    def test_visitation_matches_occupancy(self, attracted):
        pol = Policy(0.5, 0.5)
        rep = estimate_discounted(attracted, pol, "visitation", 40_000, seed=7, state=0)
        assert abs(rep.mean - 0.53) <= 3 * rep.stderr
        rep1 = estimate_discounted(attracted, pol, "visitation", 40_000, seed=8, state=1)
        assert abs(rep1.mean - 0.47) <= 3 * rep1.stderr

    def test_reward_matches_analytic(self, attracted):
        pol = Policy(attracted.p0, attracted.p1)
        rep = estimate_discounted(attracted, pol, "reward", 40_000, seed=9)
        assert abs(rep.mean - reward_of(pol, attracted)) <= 3 * rep.stderr

    def test_cost_matches_analytic(self, attracted):
        pol = Policy(0.55, 0.8)
        rep = estimate_discounted(attracted, pol, "cost", 40_000, seed=10)
        assert abs(rep.mean - cost_of(pol, attracted)) <= 3 * rep.stderr

    def test_one_step_case(self):
        params = ChainParams(p0=0.7, p1=0.9, init0=0.8, gamma=0.0)
        pol = Policy(0.6, 0.75)
        rep = estimate_discounted(params, pol, "reward", 20_000, seed=11)
        assert rep.horizon == 1
        assert abs(rep.mean - reward_of(pol, params)) <= 3 * rep.stderr

    def test_truncation_insensitive(self, attracted):
        pol = Policy(0.6, 0.8)
        h = rep = None
        base = estimate_discounted(attracted, pol, "reward", 5_000, seed=12)
        doubled = estimate_discounted(
            attracted, pol, "reward", 5_000, seed=12, horizon=2 * base.horizon
        )
        # same seed: identical draws over the shared prefix, so the gap is
        # pure truncation error
        assert abs(base.mean - doubled.mean) <= 1e-5

    def test_stderr_scaling(self, attracted):
        pol = Policy(0.6, 0.8)
        small = estimate_discounted(attracted, pol, "reward", 4_000, seed=13)
        large = estimate_discounted(attracted, pol, "reward", 16_000, seed=13)
        assert large.stderr == pytest.approx(small.stderr / 2, rel=0.2)

    def test_seed_determinism(self, attracted):
        pol = Policy(0.4, 0.9)
        a = estimate_discounted(attracted, pol, "visitation", 1_000, seed=14, state=0)
        b = estimate_discounted(attracted, pol, "visitation", 1_000, seed=14, state=0)
        assert a == b

    def test_validation(self, attracted):
        with pytest.raises(ValueError):
            estimate_discounted(attracted, Policy(0.5, 0.5), "reward", 99, seed=0)
        with pytest.raises(ValueError):
            estimate_discounted(attracted, Policy(0.5, 0.5), "visitation", 100, seed=0)
        with pytest.raises(ValueError):
            estimate_discounted(attracted, Policy(0.5, 0.5), "oops", 100, seed=0)
