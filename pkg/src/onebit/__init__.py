"""Mean estimation of a Gaussian from adaptive one-bit messages.

Two one-bit schemes are implemented: a sign recursion with iterate
averaging, and a greedy Bayes scheme that re-solves a fixed-point
threshold against a grid posterior after every message. The package also
evaluates the matching lower and upper risk bounds and runs Monte Carlo
risk curves.
"""

from .bounds import (
    BoundReport,
    bound_report,
    ceo_lower_bound,
    ceo_upper_bound,
    fisher_info_interval_union,
    lemma1_expression,
    prior_fisher_info,
    van_trees_bound,
)
from .encoders import (
    BayesState,
    SignSgdState,
    bayes_encode,
    bayes_init,
    bayes_update,
    empirical_mean,
    empirical_mean_step,
    psi,
    psi_prime0,
    sgd_estimate,
    sgd_init,
    sgd_step,
)
from .estimators import EmpiricalMeanEstimator, OneStepBayesEstimator, SignSGDEstimator
from .exceptions import (
    BracketError,
    DegenerateSplitError,
    GridExhaustedError,
    NotLogConcaveError,
    OneBitError,
    UndefinedFisherInformationError,
)
from .normal import (
    GammaSchedule,
    gamma_at,
    log_std_normal_cdf,
    probit_weight,
    sign,
    std_normal_cdf,
    std_normal_pdf,
)
from .posterior import (
    GridDensity,
    PriorSpec,
    conditional_mean,
    grid_from_prior,
    parse_prior,
    posterior_update,
    solve_threshold,
    truncated_means,
)
from .simulation import (
    RiskCurve,
    SimConfig,
    TrialResult,
    export_csv,
    run_monte_carlo,
    run_trial,
)

__version__ = "0.1.0"
