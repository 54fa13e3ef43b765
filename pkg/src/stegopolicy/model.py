"""Two-state chain model: problem instances, policies, and occupancy algebra.

A problem instance is a binary-state chain whose next-state distribution at
state ``s`` puts mass ``p_s`` on state 0.  A policy replaces that mass with
``a_s``.  The discounted state-visitation pair ``(d0, d1)`` induced by a
policy has a closed form, which makes the discounted entropy reward and the
discounted total-variation cost cheap to evaluate exactly.

Everything here is a pure function of immutable inputs; values are safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "ChainParams",
    "Policy",
    "Occupancy",
    "Shape",
    "CanonicalForm",
    "binary_entropy",
    "tv_cost",
    "occupancy_of",
    "reward_of",
    "cost_of",
    "canonicalize",
    "uncanonicalize",
]

_SUM_TOL = 1e-12


def _check_prob(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class ChainParams:
    """Chain instance: transition masses on state 0, initial mass, discount.

    ``p0 = P(next = 0 | state 0)``, ``p1 = P(next = 0 | state 1)``,
    ``init0`` is the initial mass on state 0, and ``gamma`` the discount
    factor in ``[0, 1)``.  The discounted initial mass ``d0_gamma`` is always
    derived, never stored, so instances cannot drift inconsistent.
    """

    p0: float
    p1: float
    init0: float
    gamma: float

    def __post_init__(self) -> None:
        _check_prob("p0", self.p0)
        _check_prob("p1", self.p1)
        _check_prob("init0", self.init0)
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma!r}")

    @property
    def init1(self) -> float:
        return 1.0 - self.init0

    @property
    def d0_gamma(self) -> float:
        """Discounted initial mass on state 0: (1 - gamma) * init0."""
        return (1.0 - self.gamma) * self.init0


@dataclass(frozen=True)
class Policy:
    """Replacement next-state distribution pair: mass on state 0 per state."""

    a0: float
    a1: float

    def __post_init__(self) -> None:
        _check_prob("a0", self.a0)
        _check_prob("a1", self.a1)


@dataclass(frozen=True)
class Occupancy:
    """Discounted visitation pair (d0, d1) and the products x_s = a_s * d_s."""

    d0: float
    d1: float
    x0: float
    x1: float

    def __post_init__(self) -> None:
        if abs(self.d0 + self.d1 - 1.0) > _SUM_TOL:
            raise ValueError(f"d0 + d1 must equal 1, got {self.d0 + self.d1!r}")
        for s, (x, d) in enumerate(((self.x0, self.d0), (self.x1, self.d1))):
            if x < -_SUM_TOL or x > d + _SUM_TOL:
                raise ValueError(f"x{s}={x!r} must lie in [0, d{s}={d!r}]")


class Shape(Enum):
    """Instance geometry after canonical relabeling.

    ATTRACTED: both canonical transition masses are >= 1/2 (each state leans
    toward state 0).  OSCILLATORY: state 1 leans toward 0 while state 0 leans
    away, so trajectories tend to alternate.  STICKY_MIXED: each state leans
    toward itself; this shape is a fixed point of the relabeling and has no
    closed-form solution, so solvers fall back to brute force.
    """

    ATTRACTED = "attracted"
    OSCILLATORY = "oscillatory"
    STICKY_MIXED = "sticky_mixed"


@dataclass(frozen=True)
class CanonicalForm:
    """A relabeled instance plus the information needed to undo the relabel."""

    params: ChainParams
    swapped: bool
    shape: Shape


def binary_entropy(a: float) -> float:
    """Entropy in bits of the distribution (a, 1-a), with 0*log(0) = 0."""
    _check_prob("a", a)
    if a == 0.0 or a == 1.0:
        return 0.0
    return -(a * math.log2(a) + (1.0 - a) * math.log2(1.0 - a))


def tv_cost(a: float, p: float) -> float:
    """Total-variation distance between (a, 1-a) and (p, 1-p): 2|a - p|."""
    _check_prob("a", a)
    _check_prob("p", p)
    return 2.0 * abs(a - p)


def occupancy_of(policy: Policy, params: ChainParams) -> Occupancy:
    """Discounted visitation induced by a policy.

    Solves the two-state flow-conservation system in closed form:
    ``d0 = (d0_gamma + gamma*a1) / (1 - gamma*a0 + gamma*a1)`` and
    ``d1 = 1 - d0``.  The denominator is positive for every valid input.
    """
    g = params.gamma
    denom = 1.0 - g * policy.a0 + g * policy.a1
    d0 = (params.d0_gamma + g * policy.a1) / denom
    d1 = 1.0 - d0
    return Occupancy(d0=d0, d1=d1, x0=policy.a0 * d0, x1=policy.a1 * d1)


def reward_of(policy: Policy, params: ChainParams) -> float:
    """Normalized discounted entropy of the policy, in bits per step."""
    occ = occupancy_of(policy, params)
    return occ.d0 * binary_entropy(policy.a0) + occ.d1 * binary_entropy(policy.a1)


def cost_of(policy: Policy, params: ChainParams) -> float:
    """Normalized discounted total-variation cost of the policy."""
    occ = occupancy_of(policy, params)
    return occ.d0 * tv_cost(policy.a0, params.p0) + occ.d1 * tv_cost(
        policy.a1, params.p1
    )


def canonicalize(params: ChainParams) -> CanonicalForm:
    """Relabel states so the instance lands in a solver-recognized shape.

    Swapping the state names maps ``(p0, p1, init0)`` to
    ``(1-p1, 1-p0, 1-init0)``.  Instances with both masses <= 1/2 become
    ATTRACTED after the swap; instances with ``p1 >= 1/2 > p0`` are already
    OSCILLATORY.  Instances with ``p0 > 1/2 > p1`` relabel onto the same
    pattern, so they stay STICKY_MIXED under either labeling and are kept
    unswapped.
    """
    p0, p1 = params.p0, params.p1
    if p0 >= 0.5 and p1 >= 0.5:
        return CanonicalForm(params=params, swapped=False, shape=Shape.ATTRACTED)
    if p0 <= 0.5 and p1 <= 0.5:
        swapped = ChainParams(
            p0=1.0 - p1, p1=1.0 - p0, init0=1.0 - params.init0, gamma=params.gamma
        )
        return CanonicalForm(params=swapped, swapped=True, shape=Shape.ATTRACTED)
    if p1 >= 0.5 > p0:
        return CanonicalForm(params=params, swapped=False, shape=Shape.OSCILLATORY)
    return CanonicalForm(params=params, swapped=False, shape=Shape.STICKY_MIXED)


def uncanonicalize(policy: Policy, canonical: CanonicalForm) -> Policy:
    """Map a policy between canonical and original state labels.

    The swap acts on policies as ``(a0, a1) -> (1-a1, 1-a0)``, which is an
    involution, so the same function converts in either direction.  Rewards
    and costs are invariant under the relabel-and-map-back round trip.
    """
    if not canonical.swapped:
        return policy
    return Policy(a0=1.0 - policy.a1, a1=1.0 - policy.a0)
