"""Primal-dual least-squares value iteration for episodic constrained MDPs,
with exact occupancy-measure oracles and an experiment harness."""

from .agent import (
    AgentConfig,
    EpisodeTrace,
    PolicySnapshot,
    PrimalDualAgent,
    dual_update,
    q_value,
    q_values_batch,
    softmax_policy,
    v_value,
)
from .envs import (
    EpisodeStep,
    TabularCMDP,
    TabularEnv,
    job_scheduler_realized_utility,
    load_model,
    make_env,
    make_job_scheduler,
    save_model,
)
from .harness import (
    AggregateReport,
    RunConfig,
    RunResult,
    TrialMetrics,
    evaluate_policy_snapshot,
    run_experiment,
    run_trial,
    summarize,
)
from .linalg import (
    GramInverse,
    RidgeAccumulator,
    bonus_quadratic_form,
    bonus_quadratic_form_batch,
    gram_inverse_init,
    gram_inverse_rank_one_update,
    ridge_solve,
)
from .oracle import (
    InfeasibleModelError,
    OccupancySolution,
    PolicyValues,
    check_policy,
    dual_reference_value,
    lagrangian_value,
    occupancy_residuals,
    policy_eval_dp,
    slater_margin,
    solve_occupancy_lp,
    value_iteration,
)
from .simplex import LPResult, linear_program

__version__ = "0.1.0"
