"""Tour of the exact planning oracles on the job-scheduler model.

Shows the three measuring instruments the experiment harness relies on:
backward-induction policy evaluation, value iteration for unconstrained
extremes, and the occupancy-measure LP for the constrained optimum, then
cross-checks primal and dual views of the same problem.
"""

import numpy as np

from pdlsvi import (
    dual_reference_value,
    make_job_scheduler,
    occupancy_residuals,
    policy_eval_dp,
    slater_margin,
    solve_occupancy_lp,
    value_iteration,
)


def main():
    model = make_job_scheduler()
    b = model.threshold
    print(f"job scheduler: {model.n_states} states, {model.n_actions} actions, "
          f"horizon {model.horizon}, threshold b = {b}")

    # any fixed randomized policy can be scored exactly
    uniform = np.full((model.horizon, model.n_states, model.n_actions), 0.5)
    values = policy_eval_dp(model, uniform)
    print(f"\nuniform policy:   V_r = {values.reward_value:.6f}   "
          f"V_g = {values.utility_value:.6f}  "
          f"({'meets' if values.utility_value >= b else 'misses'} the constraint)")

    # unconstrained extremes via value iteration
    v_r, _ = value_iteration(model, model.reward)
    v_g, _ = value_iteration(model, model.utility)
    best_r = v_r[0, model.initial_state]
    best_g = v_g[0, model.initial_state]
    print(f"best reward (ignoring constraint):  {best_r:.6f}")
    print(f"best utility (ignoring reward):     {best_g:.6f}")
    print(f"Slater margin (best utility - b):   {slater_margin(model):.6f}")

    # the constrained optimum is a linear program over occupancy measures
    sol = solve_occupancy_lp(model)
    print(f"\nconstrained optimum V* = {sol.value:.6f} "
          f"(utility {sol.utility_value:.6f})")
    print(f"occupancy identity residuals: {occupancy_residuals(model, sol.occupancy):.2e}")

    replay = policy_eval_dp(model, sol.policy)
    print(f"extracted policy re-scored by DP:   V_r = {replay.reward_value:.6f}   "
          f"V_g = {replay.utility_value:.6f}")

    # the dual view: min over y >= 0 of max_pi [V_r + y (V_g - b)]
    dual = dual_reference_value(model, y_max=20.0)
    print(f"\ndual reference value: {dual:.6f}   "
          f"(strong duality gap {dual - sol.value:.2e})")

    # tightening the constraint trades reward for slack
    for tighter in (4.1, 4.25, 4.4):
        print(f"V* at threshold {tighter}: {solve_occupancy_lp(model, b=tighter).value:.6f}")


if __name__ == "__main__":
    main()
