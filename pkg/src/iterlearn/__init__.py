"""Bayesian iterated learning: exact chains, bounds and simulations.

Submodules
----------
metrics
    Distances between probability vectors (root-sine, Hellinger, ...).
discrete, conditional, rafferty
    Finite hypothesis spaces: exact transition matrices, chain products,
    sustainability bounds and Monte Carlo agent chains.
schedules
    Session-length schedules ``m_t``.
gaussian
    Chained and hopped learning of a Gaussian mean.
linreg
    Iterated Bayesian linear regression and its spectral bookkeeping.
runner, cli
    JSON-configured experiments with CSV output.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    ConfigError,
    DimensionError,
    DomainError,
    ImpossibleDataError,
    InvariantViolation,
    IterLearnError,
    ParameterError,
)
from .metrics import (
    all_distances,
    bhattacharyya_coeff,
    bhattacharyya_dist,
    euclidean,
    hellinger,
    pairwise_root_sine,
    prob_vector,
    root_sine,
    total_variation,
)
from .schedules import SampleSchedule, check_cond_nt
from .seeding import derive_seed, make_rng
from .discrete import (
    DiscreteModel,
    bayes_update,
    chain_product,
    find_A_set,
    lemma1_bound,
    simulate_chain_mc,
    sustain_mass,
    transition_bound,
    transition_matrix_exact,
)
from .conditional import ConditionalModel, cond_root_sine, transition_matrix_cond
from .rafferty import rafferty_language, rafferty_model
from .gaussian import GaussianConfig, chained_moments, hopped_moments, posterior_update, simulate_gaussian_mc
from .linreg import RegressionConfig, qt_ledger, regression_update, simulate_linreg, singular_tail_check

__all__ = [
    "__version__",
    "BudgetError",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "ImpossibleDataError",
    "InvariantViolation",
    "IterLearnError",
    "ParameterError",
    "all_distances",
    "bhattacharyya_coeff",
    "bhattacharyya_dist",
    "euclidean",
    "hellinger",
    "pairwise_root_sine",
    "prob_vector",
    "root_sine",
    "total_variation",
    "SampleSchedule",
    "check_cond_nt",
    "derive_seed",
    "make_rng",
    "DiscreteModel",
    "bayes_update",
    "chain_product",
    "find_A_set",
    "lemma1_bound",
    "simulate_chain_mc",
    "sustain_mass",
    "transition_bound",
    "transition_matrix_exact",
    "ConditionalModel",
    "cond_root_sine",
    "transition_matrix_cond",
    "rafferty_language",
    "rafferty_model",
    "GaussianConfig",
    "chained_moments",
    "hopped_moments",
    "posterior_update",
    "simulate_gaussian_mc",
    "RegressionConfig",
    "qt_ledger",
    "regression_update",
    "simulate_linreg",
    "singular_tail_check",
]
