"""Collaborative noisy-20-questions target localization toolkit."""

__version__ = "0.1.0"

from .bounds import (
    BoundCurve,
    human_gain_ratio,
    human_mse_bound,
    human_mse_bound_opt,
    joint_mse_lower_bound,
    mse_from_tail,
    mse_lower_bound,
    mse_upper_bound,
    multi_human_bounds,
    tail_upper_bound,
)
from .infotheory import (
    LN2,
    binary_entropy,
    bsc_capacity,
    bsc_pmfs,
    bz_exponent,
    expected_entropy_gain,
    grid_entropy,
    optimal_query_mass,
    pmf_entropy,
)
from .players import PlayerModel, error_prob, respond
from .policies import (
    BzState,
    CostLedger,
    bisect_query,
    bz_alpha,
    bz_step,
    construct_joint_queries_1d,
    gain_with_cost,
    joint_gain,
    select_player_cost,
    sequential_cycle,
    sequential_expected_entropy_loss,
    unknown_eps_gain_curve,
    unknown_eps_query,
    unknown_eps_select_player,
)
from .posterior import (
    GridPosterior,
    JointGridPosterior,
    QueryRegion,
    bayes_update,
    dyadic_partition,
    eps_marginal,
    joint_bayes_update,
    joint_marginals,
    joint_means,
    mass,
    median,
    quantile,
    sub_marginal,
    verify_equalization,
    x_marginal,
)
from .sim import (
    MseCurve,
    PriorSpec,
    ScenarioConfig,
    compare_bounds,
    curve_from_csv,
    curve_to_csv,
    make_prior,
    run_monte_carlo,
    run_trial,
    trial_seed,
)
