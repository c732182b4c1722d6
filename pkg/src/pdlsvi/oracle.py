"""Exact planning oracles for tabular CMDPs.

Everything here works on the known model: backward-induction policy
evaluation, optimal values via an occupancy-measure linear program, the
Slater margin of the constraint, and Lagrangian values used for dual-side
cross-checks. These are the measuring instruments the experiment harness
scores the learning agent against, so they are exact up to solver tolerance.
"""

from dataclasses import dataclass

import numpy as np

from .envs import TabularCMDP
from .simplex import linear_program

MARGINAL_FLOOR = 1e-12


class InfeasibleModelError(Exception):
    """No policy satisfies the utility constraint at the requested level."""


@dataclass
class PolicyValues:
    """Exact values of a fixed randomized policy from the initial state."""

    reward_value: float
    utility_value: float
    v_r: np.ndarray  # (H+1, S), v_r[h] is the step-h value table
    v_g: np.ndarray


@dataclass
class OccupancySolution:
    value: float          # optimal constrained reward value
    utility_value: float  # utility of the optimizer (>= b)
    occupancy: np.ndarray  # (H, S, A)
    policy: np.ndarray     # (H, S, A), extracted from the occupancy


def check_policy(policy: np.ndarray, model: TabularCMDP, tol: float = 1e-8) -> None:
    H, S, A = model.horizon, model.n_states, model.n_actions
    if policy.shape != (H, S, A):
        raise ValueError(f"policy must have shape {(H, S, A)}")
    if np.any(policy < -tol):
        raise ValueError("policy has negative probabilities")
    if np.any(np.abs(policy.sum(axis=2) - 1.0) > tol):
        raise ValueError("policy rows must sum to 1")


def policy_eval_dp(model: TabularCMDP, policy: np.ndarray) -> PolicyValues:
    """Exact backward-induction evaluation of a randomized step policy."""
    check_policy(policy, model)
    H, S = model.horizon, model.n_states
    v_r = np.zeros((H + 1, S))
    v_g = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        q_r = model.reward[h] + model.transition[h] @ v_r[h + 1]
        q_g = model.utility[h] + model.transition[h] @ v_g[h + 1]
        v_r[h] = np.einsum("sa,sa->s", policy[h], q_r)
        v_g[h] = np.einsum("sa,sa->s", policy[h], q_g)
    s0 = model.initial_state
    return PolicyValues(float(v_r[0, s0]), float(v_g[0, s0]), v_r, v_g)


def value_iteration(model: TabularCMDP, tables: np.ndarray):
    """Optimal value of the unconstrained MDP with the given reward tables.

    Returns (value tables (H+1, S), greedy deterministic policy (H, S)).
    """
    H, S = model.horizon, model.n_states
    v = np.zeros((H + 1, S))
    greedy = np.zeros((H, S), dtype=int)
    for h in range(H - 1, -1, -1):
        q = tables[h] + model.transition[h] @ v[h + 1]
        greedy[h] = np.argmax(q, axis=1)
        v[h] = np.max(q, axis=1)
    return v, greedy


def slater_margin(model: TabularCMDP) -> float:
    """max_pi V_g(x1) - b: how much slack the best-utility policy has."""
    v, _ = value_iteration(model, model.utility)
    return float(v[0, model.initial_state] - model.threshold)


def lagrangian_value(model: TabularCMDP, y: float) -> float:
    """max_pi [V_r(x1) + y * (V_g(x1) - b)], exact via value iteration."""
    v, _ = value_iteration(model, model.reward + y * model.utility)
    return float(v[0, model.initial_state] - y * model.threshold)


def dual_reference_value(model: TabularCMDP, y_max: float,
                         coarse: int = 512, refine_iters: int = 120) -> float:
    """min over y in [0, y_max] of the Lagrangian value.

    The dual function is convex piecewise-linear in y, so a coarse grid
    followed by golden-section refinement around the grid minimizer nails
    the minimum to far below the tolerances this is used at.
    """
    ys = np.linspace(0.0, y_max, coarse)
    vals = np.array([lagrangian_value(model, y) for y in ys])
    i = int(np.argmin(vals))
    lo = ys[max(i - 1, 0)]
    hi = ys[min(i + 1, coarse - 1)]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = lagrangian_value(model, c), lagrangian_value(model, d)
    for _ in range(refine_iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = lagrangian_value(model, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = lagrangian_value(model, d)
    return float(min(vals[i], fc, fd))


def occupancy_residuals(model: TabularCMDP, nu: np.ndarray) -> float:
    """Largest violation of the occupancy-measure identities."""
    H = model.horizon
    s0 = model.initial_state
    worst = float(np.max(np.abs(nu.sum(axis=(1, 2)) - 1.0)))
    init = nu[0].sum(axis=1)
    expect = np.zeros_like(init)
    expect[s0] = 1.0
    worst = max(worst, float(np.max(np.abs(init - expect))))
    for h in range(H - 1):
        inflow = np.einsum("sa,sap->p", nu[h], model.transition[h])
        worst = max(worst, float(np.max(np.abs(nu[h + 1].sum(axis=1) - inflow))))
    worst = max(worst, float(-min(nu.min(), 0.0)))
    return worst


def solve_occupancy_lp(model: TabularCMDP, b: float | None = None) -> OccupancySolution:
    """Maximize expected reward over occupancy measures with V_g >= b.

    Variables are nu_h(s, a) plus one slack for the utility constraint.
    Raises InfeasibleModelError when no occupancy measure reaches b.
    """
    if b is None:
        b = model.threshold
    H, S, A = model.horizon, model.n_states, model.n_actions
    n = H * S * A

    A_eq = np.zeros((H * S + 1, n + 1))
    b_eq = np.zeros(H * S + 1)

    def col(h, s, a):
        return (h * S + s) * A + a

    # step-1 marginals pin the initial distribution
    for s in range(S):
        A_eq[s, col(0, s, 0) : col(0, s, 0) + A] = 1.0
    b_eq[model.initial_state] = 1.0
    # flow conservation between consecutive steps
    for h in range(1, H):
        for sp in range(S):
            r = h * S + sp
            A_eq[r, col(h, sp, 0) : col(h, sp, 0) + A] = 1.0
            A_eq[r, col(h - 1, 0, 0) : col(h - 1, 0, 0) + S * A] -= (
                model.transition[h - 1, :, :, sp].reshape(-1)
            )
    # total utility minus slack equals b
    A_eq[H * S, :n] = model.utility.reshape(-1)
    A_eq[H * S, n] = -1.0
    b_eq[H * S] = b

    c = np.zeros(n + 1)
    c[:n] = -model.reward.reshape(-1)

    res = linear_program(c, A_eq, b_eq)
    if res.status == "infeasible":
        raise InfeasibleModelError(
            f"no policy attains utility {b} from state {model.initial_state}"
        )
    if res.status != "optimal":
        raise RuntimeError(f"occupancy LP ended with status {res.status!r}")

    nu = res.x[:n].reshape(H, S, A)
    marginals = nu.sum(axis=2, keepdims=True)
    uniform = np.full((H, S, A), 1.0 / A)
    with np.errstate(invalid="ignore", divide="ignore"):
        policy = np.where(marginals > MARGINAL_FLOOR, nu / marginals, uniform)
    return OccupancySolution(
        value=float((nu * model.reward).sum()),
        utility_value=float((nu * model.utility).sum()),
        occupancy=nu,
        policy=policy,
    )
