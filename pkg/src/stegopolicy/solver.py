"""Closed-form optimal replacement policies under a total-variation budget.

Maximizes the discounted entropy reward subject to a discounted TV budget
``b``.  After canonical relabeling the optimum is a deterministic pair
``(a0, a1)`` with a three-regime structure in ``b``:

* regime 1 (tight budget): only the state whose transition mass sits farther
  from 1/2 moves, by exactly the budget;
* regime 2 (coupled): both states move together -- to a common value in the
  ATTRACTED shape, or along the equal-potential curve ``phi_plus(a0) =
  phi_minus(a1)`` in the OSCILLATORY shape, solved here by bisection;
* regime 3 (saturated): both states sit at the uniform distribution.

The STICKY_MIXED shape has no closed form and is delegated to the
brute-force grid search in :mod:`stegopolicy.oracle`.

All bisections run to interval width near machine precision (cap 200
iterations) with residual assertions at 1e-10.  KKT-style potentials use
natural logs internally; an optional ``log_base`` switch exists to confirm
the returned policy is base-invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Literal, Optional

from .model import (
    CanonicalForm,
    ChainParams,
    Policy,
    Occupancy,
    Shape,
    canonicalize,
    cost_of,
    occupancy_of,
    reward_of,
    uncanonicalize,
)

__all__ = [
    "Regime",
    "SolveMethod",
    "Thresholds",
    "PolicySolution",
    "SingularInstanceError",
    "UnsupportedShapeError",
    "BracketError",
    "ConvergenceError",
    "eta",
    "thresholds_of",
    "phi",
    "invert_phi_minus",
    "psi0",
    "psi1",
    "m_gap",
    "solve_regime2_opposite",
    "optimal_policy",
]

_WIDTH_TOL = 1e-15
_MAX_ITER = 200
_RESIDUAL_TOL = 1e-10
_CLAMP_EPS = 1e-12
_FEAS_TOL = 1e-9


class SingularInstanceError(ValueError):
    """A budget-tight formula hit a vanishing denominator."""


class UnsupportedShapeError(ValueError):
    """The instance shape has no closed-form solution."""


class BracketError(ValueError):
    """A root was requested outside the bracketing interval."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its residual tolerance."""


class Regime(Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"


class SolveMethod(Enum):
    CLOSED_FORM = "closed_form"
    ORACLE_FALLBACK = "oracle_fallback"


@dataclass(frozen=True)
class Thresholds:
    """Budget levels separating the three regimes, for a canonical instance."""

    b_low: float
    b_high: float
    shape: Shape


@dataclass(frozen=True)
class PolicySolution:
    """Optimal policy plus the diagnostics needed to audit it."""

    policy: Policy
    occupancy: Occupancy
    regime: Regime
    thresholds: Optional[Thresholds]
    method: SolveMethod
    reward: float
    cost: float


def _clamp_unit(a: float) -> float:
    """Clamp to the open unit interval used by log-based potentials."""
    if a < -1e-9 or a > 1.0 + 1e-9:
        raise ValueError(f"argument {a!r} is outside [0, 1] beyond tolerance")
    return min(max(a, _CLAMP_EPS), 1.0 - _CLAMP_EPS)


def _canonical_shape(params: ChainParams) -> Shape:
    if params.p0 >= 0.5 and params.p1 >= 0.5:
        return Shape.ATTRACTED
    if params.p1 >= 0.5 > params.p0:
        return Shape.OSCILLATORY
    return Shape.STICKY_MIXED


def eta(
    state: Literal[0, 1],
    sign: Literal[1, -1],
    b: float,
    params: ChainParams,
) -> float:
    """Budget-tight replacement mass when only one state moves.

    Solves ``d_s(a) * 2 * sign * (a - p_s) = b`` for ``a`` with the other
    state's mass held at its original value, where ``d_s(a)`` is the induced
    visitation of the moving state.  ``sign=-1`` moves the mass down,
    ``sign=+1`` up.  At ``b = 0`` this returns ``p_s`` exactly.
    """
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = params.gamma
    d0g = params.d0_gamma
    half_b = 0.5 * b
    if state == 0:
        num = half_b * (1.0 + g * params.p1) + sign * params.p0 * (d0g + g * params.p1)
        den = sign * (g * params.p1 + d0g) + g * half_b
    else:
        num = half_b * (1.0 - g * params.p0) + sign * params.p1 * (
            1.0 - g * params.p0 - d0g
        )
        den = sign * (1.0 - g * params.p0 - d0g) - g * half_b
    if abs(den) < 1e-12:
        raise SingularInstanceError(
            f"eta denominator vanished for state={state}, sign={sign:+d}, b={b}"
        )
    return num / den


def phi(
    sign: Literal[1, -1],
    a: float,
    params: ChainParams,
    *,
    log_base: float = math.e,
) -> float:
    """Coupling potential whose level sets tie the two states together.

    ``phi(sign, a) = (sign + g*p0 + g*p1) * log((1-a)/a) - 2*g*log(1-a)``.
    The ``+`` branch is strictly decreasing on (0, 1/2], the ``-`` branch
    strictly increasing on [1/2, 1), and the two agree at ``a = 1/2``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not (0.0 < a < 1.0):
        raise ValueError(f"phi requires a in (0, 1), got {a!r}")
    g = params.gamma
    val = (sign + g * params.p0 + g * params.p1) * math.log((1.0 - a) / a)
    val -= 2.0 * g * math.log(1.0 - a)
    if log_base != math.e:
        val /= math.log(log_base)
    return val


def _bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    f_hi: float,
) -> float:
    """Bisection for increasing sign structure f(lo) <= 0 <= f(hi)."""
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _WIDTH_TOL:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_phi_minus(
    y: float, params: ChainParams, *, log_base: float = math.e
) -> float:
    """Inverse of the increasing ``-`` potential branch on [1/2, 1)."""
    lo = 0.5
    hi = 1.0 - _CLAMP_EPS

    def f(a: float) -> float:
        return phi(-1, a, params, log_base=log_base) - y

    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 1e-12:
        raise BracketError(f"y={y!r} lies below the branch minimum {y + f_lo!r}")
    if f_hi < -1e-12:
        raise BracketError(f"y={y!r} lies above the branch maximum {y + f_hi!r}")
    return _bisect(f, lo, hi, f_lo, f_hi)


def psi0(params: ChainParams, *, log_base: float = math.e) -> float:
    """Lower coupling anchor: solves ``phi_plus(a) = phi_minus(p1)`` on (0, 1/2].

    Lies in [p0, 1/2] exactly when p0 + p1 <= 1, which is the case where it
    sets the regime-1/2 boundary; otherwise it lands below p0.
    """
    _require_oscillatory(params)
    target = phi(-1, _clamp_unit(params.p1), params, log_base=log_base)
    lo = _CLAMP_EPS
    hi = 0.5

    def f(a: float) -> float:
        # phi_plus decreases, so negate to get the increasing orientation.
        return target - phi(1, a, params, log_base=log_base)

    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 1e-12 or f_hi < -1e-12:
        raise BracketError(
            f"phi_plus does not cross phi_minus(p1) on ({lo}, 0.5] "
            f"(endpoint values {f_lo!r}, {f_hi!r})"
        )
    root = _bisect(f, lo, hi, f_lo, f_hi)
    _assert_residual(abs(f(root)), "psi0")
    return root


def psi1(params: ChainParams, *, log_base: float = math.e) -> float:
    """Upper coupling anchor: solves ``phi_minus(a) = phi_plus(p0)`` on [1/2, 1).

    Lies in [1/2, p1] exactly when p0 + p1 >= 1, the case where it sets the
    regime-1/2 boundary.
    """
    _require_oscillatory(params)
    target = phi(1, _clamp_unit(params.p0), params, log_base=log_base)
    root = invert_phi_minus(target, params, log_base=log_base)
    _assert_residual(
        abs(phi(-1, root, params, log_base=log_base) - target), "psi1"
    )
    return root


def _require_oscillatory(params: ChainParams) -> None:
    if _canonical_shape(params) is not Shape.OSCILLATORY:
        raise UnsupportedShapeError(
            f"operation requires the oscillatory shape, got p0={params.p0}, p1={params.p1}"
        )


def _assert_residual(residual: float, what: str) -> None:
    if residual > _RESIDUAL_TOL:
        raise ConvergenceError(f"{what} residual {residual!r} exceeds {_RESIDUAL_TOL}")


def m_gap(a0: float, a1: float, params: ChainParams) -> float:
    """Visitation-weighted deviation ``d0*(a0-p0) + d1*(p1-a1)``.

    Equals half the TV cost when state 0 moves up and state 1 moves down,
    which is exactly the coupled regime of the oscillatory shape.
    """
    occ = occupancy_of(Policy(a0=a0, a1=a1), params)
    return occ.d0 * (a0 - params.p0) + occ.d1 * (params.p1 - a1)


def thresholds_of(params: ChainParams, *, log_base: float = math.e) -> Thresholds:
    """Regime boundaries for a canonical instance.

    ATTRACTED: ``b_low = 2*max{(1-g*p0-d0g)*(p1-p0), (d0g+g*p1)*(p0-p1)}``
    and ``b_high = (2*d0g+g)*(p0-p1) + 2*p1 - 1``.  OSCILLATORY:
    ``b_high = (2*d0g+g)*(1-p0-p1) + 2*p1 - 1`` while ``b_low`` is twice the
    visitation-weighted gap at the coupling anchor of whichever state moves
    alone in regime 1.  In both shapes ``b_high`` equals the cost of the
    uniform policy, so budgets at or above it saturate.
    """
    shape = _canonical_shape(params)
    g = params.gamma
    p0, p1 = params.p0, params.p1
    d0g = params.d0_gamma
    if shape is Shape.ATTRACTED:
        b_low = 2.0 * max(
            (1.0 - g * p0 - d0g) * (p1 - p0),
            (d0g + g * p1) * (p0 - p1),
        )
        b_high = (2.0 * d0g + g) * (p0 - p1) + 2.0 * p1 - 1.0
        return Thresholds(b_low=max(0.0, b_low), b_high=b_high, shape=shape)
    if shape is Shape.OSCILLATORY:
        b_high = (2.0 * d0g + g) * (1.0 - p0 - p1) + 2.0 * p1 - 1.0
        b_low = 0.0
        if 1.0 - p0 - p1 >= 0.0:
            a0_anchor = psi0(params, log_base=log_base)
            b_low += (
                2.0
                * ((d0g + g * p1) / (1.0 - g * a0_anchor + g * p1))
                * (a0_anchor - p0)
            )
        if p0 + p1 - 1.0 >= 0.0:
            a1_anchor = psi1(params, log_base=log_base)
            b_low += (
                2.0
                * ((1.0 - g * p0 - d0g) / (1.0 - g * p0 + g * a1_anchor))
                * (p1 - a1_anchor)
            )
        return Thresholds(b_low=max(0.0, b_low), b_high=b_high, shape=shape)
    raise UnsupportedShapeError(
        "sticky-mixed instances have no closed-form thresholds"
    )


def solve_regime2_opposite(
    b: float, params: ChainParams, *, log_base: float = math.e
) -> Policy:
    """Coupled-regime policy for the oscillatory shape.

    Returns the unique ``(a0, a1)`` in ``[p0, 1/2] x [1/2, p1]`` with
    ``phi_plus(a0) = phi_minus(a1)`` and ``m_gap(a0, a1) = b/2``.  Outer
    bisection runs over ``a0``; if the endpoints fail to bracket (numerical
    non-monotonicity), a 10^4-point scan locates a sign change first.
    """
    _require_oscillatory(params)
    lo = _clamp_unit(params.p0)
    hi = 0.5

    def paired(a0: float) -> float:
        return invert_phi_minus(
            phi(1, _clamp_unit(a0), params, log_base=log_base),
            params,
            log_base=log_base,
        )

    def g_fun(a0: float) -> float:
        return m_gap(a0, paired(a0), params) - 0.5 * b

    g_lo, g_hi = g_fun(lo), g_fun(hi)
    if abs(g_lo) <= _RESIDUAL_TOL:
        a0 = lo
    elif abs(g_hi) <= _RESIDUAL_TOL:
        a0 = hi
    elif g_lo > 0.0 or g_hi < 0.0:
        a0 = _scan_bracket(g_fun, lo, hi)
    else:
        a0 = _bisect(g_fun, lo, hi, g_lo, g_hi)
    a1 = paired(a0)
    phi_residual = abs(
        phi(1, _clamp_unit(a0), params, log_base=log_base)
        - phi(-1, _clamp_unit(a1), params, log_base=log_base)
    )
    m_residual = abs(m_gap(a0, a1, params) - 0.5 * b)
    if phi_residual > _RESIDUAL_TOL or m_residual > _RESIDUAL_TOL:
        raise ConvergenceError(
            "coupled-regime solve failed: "
            f"a0={a0!r}, a1={a1!r}, potential residual={phi_residual!r}, "
            f"budget residual={m_residual!r}, b={b!r}, params={params!r}"
        )
    return Policy(a0=a0, a1=a1)


def _scan_bracket(g_fun: Callable[[float], float], lo: float, hi: float) -> float:
    n = 10_000
    prev_a, prev_g = lo, g_fun(lo)
    best_a, best_abs = prev_a, abs(prev_g)
    for i in range(1, n + 1):
        a = lo + (hi - lo) * i / n
        val = g_fun(a)
        if abs(val) < best_abs:
            best_a, best_abs = a, abs(val)
        if prev_g <= 0.0 <= val:
            return _bisect(g_fun, prev_a, a, prev_g, val)
        prev_a, prev_g = a, val
    if best_abs <= _RESIDUAL_TOL:
        return best_a
    raise ConvergenceError(
        f"no sign change of the coupled-regime equation on [{lo}, {hi}]"
    )


def _solve_canonical(
    params: ChainParams,
    b: float,
    thresholds: Thresholds,
    *,
    log_base: float = math.e,
) -> tuple[Policy, Regime]:
    """Dispatch on the regime for a canonical ATTRACTED/OSCILLATORY instance.

    Regime membership is inclusive on the left everywhere; the policy is
    continuous across both boundaries, so the assignments agree there.
    """
    p0, p1 = params.p0, params.p1
    if b >= thresholds.b_high:
        return Policy(a0=0.5, a1=0.5), Regime.R3
    if b >= thresholds.b_low:
        if thresholds.shape is Shape.ATTRACTED:
            # Tight budget with a common action a: the cost is
            # 2*d0*(p0-a) + 2*d1*(p1-a) = b with d0 = d0g + g*a, which solves
            # to a = M*(d0g*p0 + (1-d0g)*p1 - b/2), M = 1/(1 - g*p0 + g*p1).
            g = params.gamma
            d0g = params.d0_gamma
            big_m = 1.0 / (1.0 - g * p0 + g * p1)
            a = big_m * (d0g * p0 + (1.0 - d0g) * p1 - 0.5 * b)
            return Policy(a0=a, a1=a), Regime.R2
        return solve_regime2_opposite(b, params, log_base=log_base), Regime.R2
    if abs(0.5 - p1) >= abs(0.5 - p0):
        return Policy(a0=p0, a1=eta(1, -1, b, params)), Regime.R1
    if thresholds.shape is Shape.ATTRACTED:
        return Policy(a0=eta(0, -1, b, params), a1=p1), Regime.R1
    return Policy(a0=eta(0, 1, b, params), a1=p1), Regime.R1


def _sticky_fallback(params: ChainParams, b: float) -> tuple[Policy, Regime]:
    """Brute-force solve for the shape without a closed form.

    Grid of 2001 points per axis over the box between each state's original
    mass and 1/2, then two rounds of 10x local refinement.
    """
    from .oracle import grid_search  # deferred: oracle depends on this module's types

    a0_lo, a0_hi = min(params.p1, 0.5), max(params.p0, 0.5)
    a1_lo, a1_hi = min(params.p1, 0.5), max(params.p0, 0.5)
    result = grid_search(
        params,
        b,
        step=max(a0_hi - a0_lo, a1_hi - a1_lo) / 2000.0,
        a0_range=(a0_lo, a0_hi),
        a1_range=(a1_lo, a1_hi),
        refine_rounds=2,
    )
    policy = result.policy
    saturation = cost_of(Policy(a0=0.5, a1=0.5), params)
    if b >= saturation - 1e-12:
        regime = Regime.R3
    else:
        tol = 1e-4
        moved0 = abs(policy.a0 - params.p0) > tol
        moved1 = abs(policy.a1 - params.p1) > tol
        regime = Regime.R2 if (moved0 and moved1) else Regime.R1
    return policy, regime


def optimal_policy(
    params: ChainParams, b: float, *, log_base: float = math.e
) -> PolicySolution:
    """Entropy-maximizing policy under TV budget ``b``, with diagnostics.

    Canonicalizes the instance, dispatches on shape and regime, maps the
    policy back to the original labels, and reports reward (bits), cost, and
    occupancy on the original instance.  Never returns an infeasible policy.
    """
    if b < 0.0:
        raise ValueError(f"budget must be nonnegative, got {b!r}")
    canon = canonicalize(params)
    if canon.shape is Shape.STICKY_MIXED:
        policy, regime = _sticky_fallback(params, b)
        thresholds = None
        method = SolveMethod.ORACLE_FALLBACK
    else:
        thresholds = thresholds_of(canon.params, log_base=log_base)
        canonical_policy, regime = _solve_canonical(
            canon.params, b, thresholds, log_base=log_base
        )
        policy = uncanonicalize(canonical_policy, canon)
        method = SolveMethod.CLOSED_FORM
    occ = occupancy_of(policy, params)
    reward = reward_of(policy, params)
    cost = cost_of(policy, params)
    if cost > b + _FEAS_TOL:
        raise ConvergenceError(
            f"solver produced an infeasible policy: cost={cost!r} > b={b!r}"
        )
    return PolicySolution(
        policy=policy,
        occupancy=occ,
        regime=regime,
        thresholds=thresholds,
        method=method,
        reward=reward,
        cost=cost,
    )
