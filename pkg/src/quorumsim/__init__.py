"""Reliability toolkit for quorum-replicated chains under repeated hacking
attempts with random detection and reset times.

Two engines compute the same quantities and cross-validate each other: a
seeded Monte Carlo simulator (:mod:`quorumsim.montecarlo`) and a
semi-analytic solver built on a renewal-type restart equation
(:mod:`quorumsim.analytic`).  :mod:`quorumsim.econ` adds the cost-benefit
layer and :mod:`quorumsim.cli` the batch experiment front end.
"""

__version__ = "0.1.0"

from .analytic import (
    RenewalGrid,
    conditional_detect_mean,
    conditional_hack_mean,
    cycle_length_cdf,
    functional_term,
    instantaneous_prob,
    mean_functional_time,
    renewal_function,
    renewal_residual,
    resetting_term,
)
from .distributions import (
    Exponential,
    Gamma,
    GammaSumSeriesParams,
    Law,
    Weibull,
    gamma_sum_cdf,
    gamma_sum_mixture_weights,
    regularized_lower_gamma,
)
from .econ import (
    EconSpec,
    OptimizeResult,
    RateExpr,
    expected_net_revenue_rate,
    expected_total_net_revenue,
    optimize_m,
)
from .errors import (
    ConditioningError,
    ConfigError,
    ConvergenceError,
    InfiniteMeanError,
    NumericalError,
    QuadratureError,
    ResolutionError,
    RunawayError,
    UnsupportedFamilyError,
)
from .model import (
    AttackModel,
    hack_probability,
    limiting_functional_probability,
    quorum_size,
    transition_matrix,
)
from .montecarlo import (
    CycleDraw,
    EstimateWithError,
    ReplicationOutcome,
    draw_cycle,
    estimate_cycle_hack_prob,
    estimate_mean_functional_time,
    estimate_survival_curve,
    simulate_functional_time,
    simulate_replications,
    survival_curve_from_outcomes,
)
from .quadrature import adaptive_simpson
from .streams import ScriptedStream, mix_seed, substream

__all__ = [
    "AttackModel",
    "ConditioningError",
    "ConfigError",
    "ConvergenceError",
    "CycleDraw",
    "EconSpec",
    "EstimateWithError",
    "Exponential",
    "Gamma",
    "GammaSumSeriesParams",
    "InfiniteMeanError",
    "Law",
    "NumericalError",
    "OptimizeResult",
    "QuadratureError",
    "RateExpr",
    "RenewalGrid",
    "ReplicationOutcome",
    "ResolutionError",
    "RunawayError",
    "ScriptedStream",
    "UnsupportedFamilyError",
    "Weibull",
    "adaptive_simpson",
    "conditional_detect_mean",
    "conditional_hack_mean",
    "cycle_length_cdf",
    "draw_cycle",
    "estimate_cycle_hack_prob",
    "estimate_mean_functional_time",
    "estimate_survival_curve",
    "expected_net_revenue_rate",
    "expected_total_net_revenue",
    "functional_term",
    "gamma_sum_cdf",
    "gamma_sum_mixture_weights",
    "hack_probability",
    "instantaneous_prob",
    "limiting_functional_probability",
    "mean_functional_time",
    "mix_seed",
    "optimize_m",
    "quorum_size",
    "regularized_lower_gamma",
    "renewal_function",
    "renewal_residual",
    "resetting_term",
    "simulate_functional_time",
    "simulate_replications",
    "survival_curve_from_outcomes",
    "substream",
    "transition_matrix",
]
