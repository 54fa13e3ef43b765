"""Independent verification of the closed-form solver.

Three unrelated lines of evidence, kept free of the solver's formulas:

* :func:`grid_search` maximizes the exact reward over a dense feasible grid
  of deterministic policies (embarrassingly parallel over grid rows; results
  merge by max-reduction with a deterministic lexicographic tie-break);
* :func:`evaluate_mixed` / :func:`collapse` exercise finite-support
  randomized policies and the claim that averaging a state's mixture into a
  single action never loses reward and never gains cost;
* :func:`kkt_verify` reconstructs the full multiplier set for a candidate
  optimum and numerically checks stationarity, feasibility, dual
  nonnegativity, and complementary slackness, so a failure localizes which
  optimality condition breaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import (
    ChainParams,
    Policy,
    binary_entropy,
    cost_of,
    occupancy_of,
    reward_of,
)
from .solver import Regime, Thresholds, UnsupportedShapeError, thresholds_of

__all__ = [
    "GridResult",
    "MixedPolicy",
    "KktReport",
    "grid_search",
    "evaluate_mixed",
    "collapse",
    "z_funcs",
    "kkt_verify",
]

_STATIONARITY_TOL = 1e-6
_DUAL_TOL = 1e-9
_CS_TOL = 1e-8
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class GridResult:
    """Best feasible grid policy with its exact reward (bits) and cost."""

    policy: Policy
    reward: float
    cost: float


def _entropy_bits_vec(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    interior = (a > 0.0) & (a < 1.0)
    ai = a[interior]
    out[interior] = -(ai * np.log2(ai) + (1.0 - ai) * np.log2(1.0 - ai))
    return out


def _grid_best(
    params: ChainParams,
    b: float,
    a0_axis: np.ndarray,
    a1_axis: np.ndarray,
) -> tuple[float, float, float, float] | None:
    """Best feasible point on the grid, or None if every point is infeasible.

    Ties on reward resolve to the lexicographically smallest (a0, a1), which
    is the first maximum in row-major order over ascending axes.
    """
    g = params.gamma
    h0 = _entropy_bits_vec(a0_axis)[:, None]
    h1 = _entropy_bits_vec(a1_axis)[None, :]
    t0 = (2.0 * np.abs(a0_axis - params.p0))[:, None]
    t1 = (2.0 * np.abs(a1_axis - params.p1))[None, :]
    d0 = (params.d0_gamma + g * a1_axis)[None, :] / (
        (1.0 + g * a1_axis)[None, :] - (g * a0_axis)[:, None]
    )
    cost = d0 * (t0 - t1)
    cost += t1
    reward = d0 * (h0 - h1)
    reward += h1
    infeasible = cost > b + 1e-12
    if infeasible.all():
        return None
    best = np.where(infeasible, -np.inf, reward)
    i, j = divmod(int(np.argmax(best)), a1_axis.size)
    return (
        float(a0_axis[i]),
        float(a1_axis[j]),
        float(reward[i, j]),
        float(cost[i, j]),
    )


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    lo = max(0.0, lo)
    hi = min(1.0, hi)
    n = max(1, int(round((hi - lo) / step))) if hi > lo else 0
    return lo + (hi - lo) * np.arange(n + 1) / n if n else np.array([lo])


def grid_search(
    params: ChainParams,
    b: float,
    step: float = 1e-3,
    *,
    a0_range: tuple[float, float] = (0.0, 1.0),
    a1_range: tuple[float, float] = (0.0, 1.0),
    refine_rounds: int = 2,
) -> GridResult:
    """Exhaustive feasible-reward maximization over a deterministic grid.

    Evaluates every (a0, a1) pair on the grid plus the always-feasible
    exact candidates (p0, p1) and (1/2, 1/2), keeps the feasible maximizer,
    then runs ``refine_rounds`` rounds of 10x local grid refinement around
    the incumbent.  Fixed grids make the output a reproducible fixture.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    candidates: list[tuple[float, float, float, float]] = []
    for a0, a1 in ((params.p0, params.p1), (0.5, 0.5)):
        pol = Policy(a0=a0, a1=a1)
        c = cost_of(pol, params)
        if c <= b + 1e-12:
            candidates.append((a0, a1, reward_of(pol, params), c))

    best = _grid_best(params, b, _axis(*a0_range, step), _axis(*a1_range, step))
    if best is not None:
        candidates.append(best)
    incumbent = min(candidates, key=lambda t: (-t[2], t[0], t[1]))

    span = step
    for _ in range(refine_rounds):
        fine = span / 10.0
        local = _grid_best(
            params,
            b,
            _axis(incumbent[0] - span, incumbent[0] + span, fine),
            _axis(incumbent[1] - span, incumbent[1] + span, fine),
        )
        if local is not None and local[2] > incumbent[2]:
            incumbent = local
        span = fine

    return GridResult(
        policy=Policy(a0=incumbent[0], a1=incumbent[1]),
        reward=incumbent[2],
        cost=incumbent[3],
    )


@dataclass(frozen=True)
class MixedPolicy:
    """Finite-support randomized policy: per-state lists of (action, weight)."""

    atoms0: tuple[tuple[float, float], ...]
    atoms1: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        for s, atoms in enumerate((self.atoms0, self.atoms1)):
            if not atoms:
                raise ValueError(f"state {s} needs at least one atom")
            total = 0.0
            for a, w in atoms:
                if not (0.0 <= a <= 1.0):
                    raise ValueError(f"action {a!r} outside [0, 1] at state {s}")
                if w < -1e-12:
                    raise ValueError(f"negative weight {w!r} at state {s}")
                total += w
            if abs(total - 1.0) > 1e-12:
                raise ValueError(f"state-{s} weights sum to {total!r}, not 1")


def collapse(mp: MixedPolicy) -> Policy:
    """Per-state weighted mean action; never loses reward or gains cost."""
    a0 = sum(a * w for a, w in mp.atoms0)
    a1 = sum(a * w for a, w in mp.atoms1)
    return Policy(a0=min(max(a0, 0.0), 1.0), a1=min(max(a1, 0.0), 1.0))


def evaluate_mixed(mp: MixedPolicy, params: ChainParams) -> tuple[float, float]:
    """Exact (reward bits, cost) of a finite-support randomized policy.

    The flow equations depend on actions only through their conditional
    means, so occupancy equals that of the collapsed policy; reward and cost
    then average atom-wise under the visitation weights.
    """
    mean = collapse(mp)
    occ = occupancy_of(mean, params)
    reward = occ.d0 * sum(w * binary_entropy(a) for a, w in mp.atoms0)
    reward += occ.d1 * sum(w * binary_entropy(a) for a, w in mp.atoms1)
    cost = occ.d0 * sum(w * 2.0 * abs(a - params.p0) for a, w in mp.atoms0)
    cost += occ.d1 * sum(w * 2.0 * abs(a - params.p1) for a, w in mp.atoms1)
    return reward, cost


def z_funcs(a0: float, a1: float, params: ChainParams) -> tuple[float, float]:
    """Stationarity gap functions (natural log).

    ``z0 = (-1-g*p1)*log((1-a0)/a0) + g*p1*log((1-a1)/a1) + g*log((1-a0)/(1-a1))``
    ``z1 = (-g*p0)*log((1-a0)/a0) + (-1+g*p0)*log((1-a1)/a1) + g*log((1-a0)/(1-a1))``

    Scaled by ``M = 1/(1 - g*p0 + g*p1)`` they are exactly the multiplier
    differences ``alpha_s - beta_s`` demanded by stationarity at ``(a0, a1)``.
    """
    if not (0.0 < a0 < 1.0 and 0.0 < a1 < 1.0):
        raise ValueError("z functions require actions in the open interval (0, 1)")
    g = params.gamma
    l0 = math.log((1.0 - a0) / a0)
    l1 = math.log((1.0 - a1) / a1)
    cross = g * math.log((1.0 - a0) / (1.0 - a1))
    z0 = (-1.0 - g * params.p1) * l0 + g * params.p1 * l1 + cross
    z1 = (-g * params.p0) * l0 + (-1.0 + g * params.p0) * l1 + cross
    return z0, z1


@dataclass(frozen=True)
class KktReport:
    """Full multiplier reconstruction and condition-by-condition residuals."""

    lam: float
    alpha0: float
    alpha1: float
    beta0: float
    beta1: float
    omega0: float
    omega1: float
    nu0: float
    nu1: float
    mu0: float
    mu1: float
    c0: float
    c1: float
    stationarity: tuple[float, float, float, float, float, float]
    feasibility: Mapping[str, bool]
    cs_products: tuple[float, ...]
    regime: Regime
    passed: bool


def _failure_report(regime: Regime, note_residual: float = math.inf) -> KktReport:
    nan = math.nan
    return KktReport(
        lam=nan, alpha0=nan, alpha1=nan, beta0=nan, beta1=nan,
        omega0=nan, omega1=nan, nu0=0.0, nu1=0.0, mu0=0.0, mu1=0.0,
        c0=nan, c1=nan,
        stationarity=(note_residual,) * 6,
        feasibility={"evaluable": False},
        cs_products=(note_residual,),
        regime=regime,
        passed=False,
    )


def kkt_verify(params: ChainParams, b: float, policy: Policy) -> KktReport:
    """Certify a candidate optimum for a canonical instance at budget ``b``.

    Classifies the regime from the thresholds, assigns the auxiliary TV
    bounds ``c0, c1`` and every multiplier from the matching regime's case
    structure, then numerically checks the six stationarity partials, primal
    feasibility, dual nonnegativity, and the complementary-slackness
    products.  Structural mismatches (for example a policy that moved the
    wrong state) come back as a diagnostic failure report, not an exception.

    The regime-1 multiplier split uses the unique assignment consistent with
    stationarity: the slack side of the TV box pins one multiplier to zero,
    that state fixes ``lam``, and the other state splits as
    ``alpha = (lam + M*z)/2``, ``beta = (lam - M*z)/2``.
    """
    thr: Thresholds = thresholds_of(params)  # raises for the uncovered shape
    g, p0, p1 = params.gamma, params.p0, params.p1
    a0, a1 = policy.a0, policy.a1
    occ = occupancy_of(policy, params)
    d0, d1, x0, x1 = occ.d0, occ.d1, occ.x0, occ.x1

    if b >= thr.b_high:
        regime = Regime.R3
    elif b >= thr.b_low:
        regime = Regime.R2
    else:
        regime = Regime.R1

    if not (0.0 < a0 < 1.0 and 0.0 < a1 < 1.0) or min(d0, d1) <= 1e-15:
        return _failure_report(regime)

    attracted = p0 >= 0.5 and p1 >= 0.5
    big_m = 1.0 / (1.0 - g * p0 + g * p1)
    z0, z1 = z_funcs(a0, a1, params)
    l0 = math.log((1.0 - a0) / a0)
    l1 = math.log((1.0 - a1) / a1)

    nu0 = nu1 = mu0 = mu1 = 0.0
    if regime is Regime.R3:
        lam = alpha0 = alpha1 = beta0 = beta1 = 0.0
        c0 = d0 * abs(p0 - 0.5)
        c1 = d1 * abs(p1 - 0.5)
    elif regime is Regime.R2:
        if attracted:
            lam = big_m * math.log(a0 / (1.0 - a0))
            alpha0 = alpha1 = lam
            beta0 = beta1 = 0.0
            c0 = d0 * (p0 - a0)
            c1 = d1 * (p1 - a1)
        else:
            alpha1 = 0.5 * (l0 - l1)
            lam = beta0 = alpha1
            alpha0 = beta1 = 0.0
            c0 = d0 * (a0 - p0)
            c1 = d1 * (p1 - a1)
    else:
        move1 = abs(0.5 - p1) >= abs(0.5 - p0)
        if move1:
            c0, c1 = 0.0, 0.5 * b
            beta1 = 0.0
            alpha1 = big_m * z1
            lam = alpha1
            alpha0 = 0.5 * (lam + big_m * z0)
            beta0 = 0.5 * (lam - big_m * z0)
        elif attracted:
            c0, c1 = 0.5 * b, 0.0
            beta0 = 0.0
            alpha0 = big_m * z0
            lam = alpha0
            alpha1 = 0.5 * (lam + big_m * z1)
            beta1 = 0.5 * (lam - big_m * z1)
        else:
            c0, c1 = 0.5 * b, 0.0
            alpha0 = 0.0
            beta0 = -big_m * z0
            lam = beta0
            alpha1 = 0.5 * (lam + big_m * z1)
            beta1 = 0.5 * (lam - big_m * z1)

    omega0 = big_m * (p0 * l0 - p1 * l1 - math.log((1.0 - a0) / (1.0 - a1)))
    omega1 = -math.log(1.0 - a1) - (alpha1 - beta1) * p1

    stationarity = (
        -l0 - alpha0 + beta0 - g * omega0 - nu0 + mu0,
        -l1 - alpha1 + beta1 - g * omega0 - nu1 + mu1,
        math.log(1.0 - a0) + (alpha0 - beta0) * p0 + omega0 + omega1 - mu0,
        math.log(1.0 - a1) + (alpha1 - beta1) * p1 + omega1 - mu1,
        lam - alpha0 - beta0,
        lam - alpha1 - beta1,
    )

    flow_res = d0 - params.d0_gamma - g * (x0 + x1)
    simplex_res = d0 + d1 - 1.0
    feasibility = {
        "budget": c0 + c1 <= 0.5 * b + _FEAS_TOL,
        "tv_lower_0": -c0 - x0 + d0 * p0 <= _FEAS_TOL,
        "tv_upper_0": x0 - d0 * p0 - c0 <= _FEAS_TOL,
        "tv_lower_1": -c1 - x1 + d1 * p1 <= _FEAS_TOL,
        "tv_upper_1": x1 - d1 * p1 - c1 <= _FEAS_TOL,
        "flow": abs(flow_res) <= _FEAS_TOL,
        "simplex": abs(simplex_res) <= _FEAS_TOL,
        "x_bounds": -1e-12 <= x0 <= d0 + 1e-12 and -1e-12 <= x1 <= d1 + 1e-12,
    }

    cs_products = (
        lam * (c0 + c1 - 0.5 * b),
        alpha0 * (-c0 - x0 + d0 * p0),
        beta0 * (x0 - d0 * p0 - c0),
        alpha1 * (-c1 - x1 + d1 * p1),
        beta1 * (x1 - d1 * p1 - c1),
        omega0 * flow_res,
        omega1 * simplex_res,
        nu0 * x0,
        nu1 * x1,
        mu0 * (x0 - d0),
        mu1 * (x1 - d1),
    )

    duals = (lam, alpha0, alpha1, beta0, beta1, nu0, nu1, mu0, mu1)
    passed = (
        all(abs(s) < _STATIONARITY_TOL for s in stationarity)
        and all(v >= -_DUAL_TOL for v in duals)
        and all(feasibility.values())
        and all(abs(p) < _CS_TOL for p in cs_products)
    )

    return KktReport(
        lam=lam, alpha0=alpha0, alpha1=alpha1, beta0=beta0, beta1=beta1,
        omega0=omega0, omega1=omega1, nu0=nu0, nu1=nu1, mu0=mu0, mu1=mu1,
        c0=c0, c1=c1,
        stationarity=stationarity,
        feasibility=feasibility,
        cs_products=cs_products,
        regime=regime,
        passed=passed,
    )
