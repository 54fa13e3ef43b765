"""Budgeted entropy-maximizing policies for two-state chains.

The package solves, verifies, and demonstrates the optimal replacement of a
two-state chain's next-state distributions under a discounted total-variation
budget: a closed-form solver with regime structure, an independent
brute-force and KKT verification layer, a Monte-Carlo simulator, and an
arithmetic-coding codec that turns the solved policy into an operational
bits-to-tokens embedding.
"""

from .model import (
    CanonicalForm,
    ChainParams,
    Occupancy,
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
from .solver import (
    BracketError,
    ConvergenceError,
    PolicySolution,
    Regime,
    SingularInstanceError,
    SolveMethod,
    Thresholds,
    UnsupportedShapeError,
    eta,
    invert_phi_minus,
    m_gap,
    optimal_policy,
    phi,
    psi0,
    psi1,
    solve_regime2_opposite,
    thresholds_of,
)
from .oracle import (
    GridResult,
    KktReport,
    MixedPolicy,
    collapse,
    evaluate_mixed,
    grid_search,
    kkt_verify,
    z_funcs,
)
from .codec import (
    BitStream,
    ChainProvider,
    DecodeError,
    DistributionProvider,
    EmbedResult,
    FixedProvider,
    IntervalState,
    PrecisionError,
    ProviderError,
    bits_to_interval,
    embed,
    extract,
    measure_rate,
)
from .simulate import EstimateReport, estimate_discounted, rollout

__version__ = "0.1.0"

__all__ = [
    "CanonicalForm",
    "ChainParams",
    "Occupancy",
    "Policy",
    "Shape",
    "binary_entropy",
    "canonicalize",
    "cost_of",
    "occupancy_of",
    "reward_of",
    "tv_cost",
    "uncanonicalize",
    "BracketError",
    "ConvergenceError",
    "PolicySolution",
    "Regime",
    "SingularInstanceError",
    "SolveMethod",
    "Thresholds",
    "UnsupportedShapeError",
    "eta",
    "invert_phi_minus",
    "m_gap",
    "optimal_policy",
    "phi",
    "psi0",
    "psi1",
    "solve_regime2_opposite",
    "thresholds_of",
    "GridResult",
    "KktReport",
    "MixedPolicy",
    "collapse",
    "evaluate_mixed",
    "grid_search",
    "kkt_verify",
    "z_funcs",
    "BitStream",
    "ChainProvider",
    "DecodeError",
    "DistributionProvider",
    "EmbedResult",
    "FixedProvider",
    "IntervalState",
    "PrecisionError",
    "ProviderError",
    "bits_to_interval",
    "embed",
    "extract",
    "measure_rate",
    "EstimateReport",
    "estimate_discounted",
    "rollout",
]
