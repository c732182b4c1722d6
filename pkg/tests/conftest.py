"""Shared helpers for the test suite."""

import numpy as np

from pdlsvi import TabularCMDP
from pdlsvi.oracle import value_iteration


def make_random_cmdp(rng, n_states, n_actions, horizon, threshold_frac=None):
    """Random dense tabular CMDP with a feasible utility threshold.

    The threshold is placed at a fraction of the best achievable utility so
    the constrained problem is always strictly feasible (positive Slater
    margin) but not trivial.
    """
    transition = rng.dirichlet(np.ones(n_states),
                               size=(horizon, n_states, n_actions))
    reward = rng.uniform(size=(horizon, n_states, n_actions))
    utility = rng.uniform(size=(horizon, n_states, n_actions))
    initial_state = int(rng.integers(n_states))
    probe = TabularCMDP(transition, reward, utility, initial_state, horizon / 2.0)
    v_g, _ = value_iteration(probe, probe.utility)
    best = float(v_g[0, initial_state])
    if threshold_frac is None:
        threshold_frac = rng.uniform(0.3, 0.8)
    threshold = max(threshold_frac * best, 1e-3)
    return TabularCMDP(transition, reward, utility, initial_state, threshold)


def grid_policies(rng, horizon, n_states, n_actions, levels, cap):
    """Policies whose action distributions live on the simplex grid with
    `levels` subdivisions per cell.

    Enumerates the full product grid when it has at most `cap` members;
    otherwise returns `cap` policies sampled uniformly from the grid. The
    result is a (n_policies, H, S, A) stack of valid policies.
    """
    from itertools import product

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    cells = horizon * n_states
    cell_dists = np.array(list(compositions(levels, n_actions)), dtype=float)
    cell_dists /= levels
    m = len(cell_dists)
    if m ** cells <= cap:
        combos = np.array(list(product(range(m), repeat=cells)))
    else:
        combos = rng.integers(m, size=(cap, cells))
    return cell_dists[combos].reshape(-1, horizon, n_states, n_actions)


def batch_policy_values(model, policies):
    """DP evaluation of a (B, H, S, A) stack of policies.

    Returns (B,) reward values and (B,) utility values from the initial
    state, matching policy_eval_dp applied policy by policy.
    """
    B = policies.shape[0]
    S = model.n_states
    v_r = np.zeros((B, S))
    v_g = np.zeros((B, S))
    for h in range(model.horizon - 1, -1, -1):
        q_r = model.reward[h] + np.einsum("sap,bp->bsa", model.transition[h], v_r)
        q_g = model.utility[h] + np.einsum("sap,bp->bsa", model.transition[h], v_g)
        v_r = np.einsum("bsa,bsa->bs", policies[:, h], q_r)
        v_g = np.einsum("bsa,bsa->bs", policies[:, h], q_g)
    s0 = model.initial_state
    return v_r[:, s0], v_g[:, s0]
