from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stegopolicy import (
    CanonicalForm,
    ChainParams,
    Policy,
    Shape,
    binary_entropy,
    canonicalize,
    cost_of,
    occupancy_of,
    reward_of,
    tv_cost,
    uncanonicalize,
)

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
interior = st.floats(min_value=0.01, max_value=0.99)
gammas = st.floats(min_value=0.0, max_value=0.95)


class TestBinaryEntropy:
    def test_symmetric_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_degenerate(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_quarter(self):
        # -0.25*log2(0.25) - 0.75*log2(0.75), evaluated at 40 digits
        assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.1)
        with pytest.raises(ValueError):
            binary_entropy(1.1)

    @given(a=probs)
    def test_mirror_symmetry(self, a):
        assert binary_entropy(a) == pytest.approx(binary_entropy(1.0 - a), abs=1e-12)

    @given(a=probs, b=probs)
    def test_concavity(self, a, b):
        mid = binary_entropy(0.5 * (a + b))
        assert mid >= 0.5 * (binary_entropy(a) + binary_entropy(b)) - 1e-12


class TestTvCost:
    def test_identity(self):
        assert tv_cost(0.7, 0.7) == 0.0

    def test_forced_value(self):
        assert tv_cost(0.3, 0.7) == pytest.approx(0.8, abs=1e-15)

    def test_point_masses(self):
        assert tv_cost(0.0, 1.0) == 2.0

    def test_domain_error(self):
        with pytest.raises(ValueError):
            tv_cost(1.2, 0.5)
        with pytest.raises(ValueError):
            tv_cost(0.5, -0.2)


class TestChainParams:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            ChainParams(p0=1.3, p1=0.5, init0=0.5, gamma=0.5)
        with pytest.raises(ValueError):
            ChainParams(p0=0.5, p1=0.5, init0=0.5, gamma=1.0)
        with pytest.raises(ValueError):
            ChainParams(p0=0.5, p1=0.5, init0=-0.1, gamma=0.5)

    @given(init0=probs, gamma=gammas)
    def test_discounted_initial_mass_range(self, init0, gamma):
        params = ChainParams(p0=0.5, p1=0.5, init0=init0, gamma=gamma)
        assert 0.0 <= params.d0_gamma <= 1.0 - gamma + 1e-15


class TestOccupancy:
    def test_no_discounting(self):
        params = ChainParams(p0=0.3, p1=0.8, init0=0.37, gamma=0.0)
        occ = occupancy_of(Policy(0.42, 0.9), params)
        assert occ.d0 == pytest.approx(0.37, abs=1e-15)

    def test_uniform_policy_standard_instance(self, attracted):
        occ = occupancy_of(Policy(0.5, 0.5), attracted)
        assert occ.d0 == pytest.approx(0.53, abs=1e-15)

    def test_frozen_chain(self):
        # policy (1, 0) freezes every trajectory in its initial state
        params = ChainParams(p0=0.7, p1=0.9, init0=0.8, gamma=0.9)
        occ = occupancy_of(Policy(1.0, 0.0), params)
        assert occ.d0 == pytest.approx(params.d0_gamma / (1.0 - params.gamma), abs=1e-12)
        assert occ.d0 == pytest.approx(params.init0, abs=1e-12)

    @given(a0=probs, a1=probs, p0=probs, p1=probs, init0=probs, gamma=gammas)
    def test_flow_conservation(self, a0, a1, p0, p1, init0, gamma):
        params = ChainParams(p0=p0, p1=p1, init0=init0, gamma=gamma)
        occ = occupancy_of(Policy(a0, a1), params)
        flow = occ.d0 - gamma * (occ.x0 + occ.x1)
        assert flow == pytest.approx(params.d0_gamma, abs=1e-12)
        assert occ.d0 + occ.d1 == pytest.approx(1.0, abs=1e-12)
        assert -1e-12 <= occ.x0 <= occ.d0 + 1e-12
        assert -1e-12 <= occ.x1 <= occ.d1 + 1e-12


class TestRewardCost:
    def test_uniform_reward(self, attracted):
        assert reward_of(Policy(0.5, 0.5), attracted) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_reward(self, attracted):
        assert reward_of(Policy(1.0, 0.0), attracted) == 0.0

    def test_zero_cost_at_original(self, attracted):
        assert cost_of(Policy(0.7, 0.9), attracted) == pytest.approx(0.0, abs=1e-15)

    def test_uniform_cost_standard_instance(self, attracted):
        # direct evaluation with d0 = 0.53: 0.53*0.4 + 0.47*0.8
        assert cost_of(Policy(0.5, 0.5), attracted) == pytest.approx(0.588, abs=1e-12)

    def test_one_step_cost(self):
        params = ChainParams(p0=0.7, p1=0.9, init0=0.8, gamma=0.0)
        got = cost_of(Policy(0.6, 0.75), params)
        expect = 0.8 * 2 * abs(0.6 - 0.7) + 0.2 * 2 * abs(0.75 - 0.9)
        assert got == pytest.approx(expect, abs=1e-14)


class TestCanonicalize:
    def test_both_low_swaps_to_attracted(self):
        canon = canonicalize(ChainParams(p0=0.3, p1=0.4, init0=0.8, gamma=0.9))
        assert canon.swapped
        assert canon.shape is Shape.ATTRACTED
        assert canon.params.p0 == pytest.approx(0.6)
        assert canon.params.p1 == pytest.approx(0.7)
        assert canon.params.init0 == pytest.approx(0.2)

    def test_oscillatory_unswapped(self, oscillatory):
        canon = canonicalize(oscillatory)
        assert not canon.swapped
        assert canon.shape is Shape.OSCILLATORY

    def test_sticky_is_relabel_fixed_point(self, sticky):
        canon = canonicalize(sticky)
        assert canon.shape is Shape.STICKY_MIXED
        # exhaustive check over the 2-element relabel group: neither labeling
        # satisfies the attracted or oscillatory preconditions
        for p0, p1 in [(sticky.p0, sticky.p1), (1 - sticky.p1, 1 - sticky.p0)]:
            assert not (p0 >= 0.5 and p1 >= 0.5)
            assert not (p1 >= 0.5 > p0)

    @given(p0=interior, p1=interior, init0=interior, gamma=gammas, a0=interior, a1=interior)
    @settings(max_examples=200)
    def test_round_trip_preserves_reward_and_cost(self, p0, p1, init0, gamma, a0, a1):
        params = ChainParams(p0=p0, p1=p1, init0=init0, gamma=gamma)
        canon = canonicalize(params)
        canonical_policy = Policy(a0, a1)
        back = uncanonicalize(canonical_policy, canon)
        assert reward_of(back, params) == pytest.approx(
            reward_of(canonical_policy, canon.params), abs=1e-12
        )
        assert cost_of(back, params) == pytest.approx(
            cost_of(canonical_policy, canon.params), abs=1e-12
        )

    def test_uncanonicalize_is_involution(self):
        params = ChainParams(p0=0.2, p1=0.3, init0=0.6, gamma=0.5)
        canon = canonicalize(params)
        pol = Policy(0.25, 0.8)
        assert uncanonicalize(uncanonicalize(pol, canon), canon) == pol

    def test_inverse_relabel_reproduces_instance(self):
        # dyadic values invert exactly; general floats to machine precision
        params = ChainParams(p0=0.125, p1=0.375, init0=0.25, gamma=0.7)
        canon = canonicalize(params)
        undone = ChainParams(
            p0=1 - canon.params.p1,
            p1=1 - canon.params.p0,
            init0=1 - canon.params.init0,
            gamma=canon.params.gamma,
        )
        assert undone == params

        params = ChainParams(p0=0.1, p1=0.45, init0=0.3, gamma=0.7)
        canon = canonicalize(params)
        assert 1 - canon.params.p1 == pytest.approx(params.p0, abs=1e-15)
        assert 1 - canon.params.p0 == pytest.approx(params.p1, abs=1e-15)
        assert 1 - canon.params.init0 == pytest.approx(params.init0, abs=1e-15)
