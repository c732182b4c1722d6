"""Learner correctness: parameter schedule, soft-max policy machinery, and
exact agreement with a transition-by-transition reference implementation.

The reference learner below re-derives every episode's weights directly from
the stored transitions, rebuilding and inverting each Gram matrix with dense
linear algebra and evaluating next-step values one transition at a time. The
production agent groups repeated states and updates inverses incrementally;
the two must agree to floating-point reshuffling error on identical streams.
"""

import math

import numpy as np
import pytest

from conftest import make_random_cmdp
from pdlsvi import (
    AgentConfig,
    PrimalDualAgent,
    TabularEnv,
    dual_update,
    make_job_scheduler,
    softmax_policy,
)

# -- parameter schedule ----------------------------------------------------------

def test_schedule_frozen_at_reference_scale():
    cfg = AgentConfig(feature_dim=20, horizon=10, episodes=20000, n_actions=2,
                      slater_gamma=1.0)
    assert cfg.xi == 20.0
    assert abs(cfg.alpha - 223.59586469675654) < 1e-9
    assert abs(cfg.eta - 0.01414213562373095) < 1e-15
    assert abs(cfg.beta - 860.7943181182467) < 1e-9


def test_schedule_beta_scales_with_c1():
    base = AgentConfig(feature_dim=20, horizon=10, episodes=20000, n_actions=2,
                       slater_gamma=1.0)
    half = AgentConfig(feature_dim=20, horizon=10, episodes=20000, n_actions=2,
                       slater_gamma=1.0, c1=0.5)
    assert abs(half.beta - 0.5 * base.beta) < 1e-9


def test_tightened_constraint_doubles_dual_cap():
    cfg = AgentConfig(feature_dim=20, horizon=10, episodes=20000, n_actions=2,
                      slater_gamma=1.0, tighten_zeta=0.1)
    assert cfg.xi == 40.0


def test_schedule_validation():
    good = dict(feature_dim=4, horizon=2, episodes=10, n_actions=2,
                slater_gamma=1.0)
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "n_actions": 1})  # derived alpha needs >= 2 actions
    AgentConfig(**{**good, "n_actions": 1, "alpha": 1.0, "beta": 0.5})  # overrides ok
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "tighten_zeta": 0.6})  # above gamma / 2
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "lam": 0.0})
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "failure_prob": 1.0})
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "alpha": -1.0})
    with pytest.raises(ValueError):
        AgentConfig(**{**good, "beta": -0.1})


# -- soft-max policy and dual step -------------------------------------------------

def test_softmax_sums_to_one_and_orders_actions():
    rng = np.random.default_rng(0)
    for _ in range(100):
        q_r = rng.uniform(0, 10, size=5)
        q_g = rng.uniform(0, 10, size=5)
        y = rng.uniform(0, 20)
        pi = softmax_policy(q_r, q_g, y, alpha=rng.uniform(0.01, 50))
        assert abs(pi.sum() - 1.0) < 1e-12
        composite = q_r + y * q_g
        order = np.argsort(composite)
        assert np.all(np.diff(pi[order]) >= -1e-15)


def test_softmax_extreme_temperature_is_stable():
    q_r = np.array([1.0, 2.0, 3.0])
    q_g = np.zeros(3)
    pi = softmax_policy(q_r, q_g, 0.0, alpha=1e8)
    assert np.all(np.isfinite(pi))
    assert abs(pi[2] - 1.0) < 1e-10
    near_uniform = softmax_policy(q_r, q_g, 0.0, alpha=1e-8)
    assert np.max(np.abs(near_uniform - 1.0 / 3.0)) < 1e-6


def test_dual_update_projects_to_interval():
    assert dual_update(0.5, 1.0, 4.0, 3.0, xi=20.0) == 1.5
    assert dual_update(0.5, 1.0, 4.0, 9.0, xi=20.0) == 0.0  # floor at zero
    assert dual_update(19.9, 1.0, 4.0, 3.0, xi=20.0) == 20.0  # ceiling at xi
    assert dual_update(5.0, 0.0, 4.0, 0.0, xi=20.0) == 5.0  # no step


# -- agent behaviour ----------------------------------------------------------------

def fresh_agent(model, episodes=10, seed=0, **overrides):
    cfg = AgentConfig(feature_dim=model.feature_dim, horizon=model.horizon,
                      episodes=episodes, n_actions=model.n_actions,
                      slater_gamma=1.0, **overrides)
    return PrimalDualAgent(cfg, np.random.default_rng(seed))


def test_first_episode_policy_is_uniform():
    # with no data every one-hot feature has the same width, so the
    # composite scores tie and the soft-max is exactly uniform
    model = make_job_scheduler()
    env = TabularEnv(model)
    agent = fresh_agent(model, episodes=5, c1=0.01)
    agent.run_episode(env, np.random.default_rng(1), 1)
    pi = agent.snapshot_policy(model.feature_tensor())
    assert np.array_equal(pi, np.full((10, 10, 2), 0.5))


def test_snapshot_before_any_episode_raises():
    model = make_job_scheduler()
    agent = fresh_agent(model)
    with pytest.raises(RuntimeError):
        agent.snapshot_policy(model.feature_tensor())


def test_backward_pass_requires_consecutive_episode():
    model = make_job_scheduler()
    agent = fresh_agent(model)
    with pytest.raises(ValueError):
        agent.backward_pass(2)


def test_zero_xi_freezes_dual_at_zero():
    model = make_job_scheduler()
    env = TabularEnv(model)
    agent = fresh_agent(model, episodes=5, c1=0.01, xi=0.0)
    rng = np.random.default_rng(3)
    for k in range(1, 6):
        trace = agent.run_episode(env, rng, k)
        assert trace.dual == 0.0
    assert agent.dual == 0.0


def test_act_matches_uniform_start():
    model = make_job_scheduler()
    agent = fresh_agent(model, episodes=5, c1=0.01, seed=11)
    agent.backward_pass(1)
    phis = model.state_features(model.initial_state)
    rng = np.random.default_rng(42)
    draws = np.array([agent.act(phis, 0, rng) for _ in range(2000)])
    # exact uniform policy: binomial(2000, 1/2) stays within 4 sigma of half
    assert abs(draws.mean() - 0.5) < 4 * 0.5 / math.sqrt(2000)


def test_estimates_converge_on_deterministic_single_path():
    # one state, one action, reward 0.3 at both steps: the only policy's
    # value is 0.6 and the ridge estimate approaches it with n/(n + lam)
    from pdlsvi import TabularCMDP
    H = 2
    model = TabularCMDP(
        transition=np.ones((H, 1, 1, 1)),
        reward=np.full((H, 1, 1), 0.3),
        utility=np.full((H, 1, 1), 0.8),
        initial_state=0,
        threshold=1.0,
    )
    env = TabularEnv(model)
    lam = 0.1
    agent = fresh_agent(model, episodes=500, lam=lam, alpha=1.0, beta=0.0, xi=0.0)
    rng = np.random.default_rng(0)
    for k in range(1, 501):
        trace = agent.run_episode(env, rng, k)
    f = 499.0 / (499.0 + lam)  # shrinkage after 499 absorbed episodes
    assert abs(trace.v_r1 - f * 0.3 * (1.0 + f)) < 1e-12
    assert abs(trace.v_r1 - 0.6) < 1e-3


def test_registry_handles_many_states():
    rng = np.random.default_rng(5)
    model = make_random_cmdp(rng, n_states=30, n_actions=2, horizon=3)
    env = TabularEnv(model)
    agent = fresh_agent(model, episodes=40, c1=0.05)
    env_rng = np.random.default_rng(6)
    for k in range(1, 41):
        agent.run_episode(env, env_rng, k)
    v_r_tab, v_g_tab = agent.backward_pass(41)
    assert v_r_tab.shape[0] == 3
    assert v_r_tab.shape[1] <= 30
    assert np.all(np.isfinite(v_r_tab)) and np.all(np.isfinite(v_g_tab))


# -- reference implementation agreement ----------------------------------------------

class ReferenceLearner:
    """Literal per-transition version of the same algorithm.

    Keeps every transition; each episode rebuilds each step's Gram matrix
    from scratch, inverts it densely, and forms regression targets by
    evaluating the next step's value transition by transition.
    """

    def __init__(self, config, policy_rng):
        self.cfg = config
        self.policy_rng = policy_rng
        d, H = config.feature_dim, config.horizon
        self.history = [[] for _ in range(H)]  # (phi, r, g, next_phi_block)
        self.w_r = np.zeros((H, d))
        self.w_g = np.zeros((H, d))
        self.inv = [np.eye(d) / config.lam for _ in range(H)]
        self.dual = 0.0

    def _q(self, w, inv, phis):
        scores = phis @ w + self.cfg.beta * np.sqrt(
            np.einsum("ad,dk,ak->a", phis, inv, phis))
        return np.minimum(scores, self.cfg.horizon)

    def _pi(self, h, phis):
        q_r = self._q(self.w_r[h], self.inv[h], phis)
        q_g = self._q(self.w_g[h], self.inv[h], phis)
        z = self.cfg.alpha * (q_r + self.dual * q_g)
        z = z - z.max()
        e = np.exp(z)
        return q_r, q_g, e / e.sum()

    def backward(self):
        cfg = self.cfg
        d, H = cfg.feature_dim, cfg.horizon
        for h in range(H - 1, -1, -1):
            gram = cfg.lam * np.eye(d)
            for phi, _, _, _ in self.history[h]:
                gram += np.outer(phi, phi)
            self.inv[h] = np.linalg.inv(gram)
            rhs_r = np.zeros(d)
            rhs_g = np.zeros(d)
            for phi, r, g, next_block in self.history[h]:
                v_r = v_g = 0.0
                if next_block is not None:
                    q_r, q_g, pi = self._pi(h + 1, next_block)
                    v_r = float(pi @ q_r)
                    v_g = float(pi @ q_g)
                rhs_r += phi * (r + v_r)
                rhs_g += phi * (g + v_g)
            self.w_r[h] = self.inv[h] @ rhs_r
            self.w_g[h] = self.inv[h] @ rhs_g

    def run_episode(self, env, env_rng, threshold):
        cfg = self.cfg
        self.backward()
        state = env.reset()
        v_r1 = v_g1 = 0.0
        actions = []
        episode = []
        for h in range(cfg.horizon):
            phis = env.state_features(state)
            q_r, q_g, pi = self._pi(h, phis)
            if h == 0:
                v_r1 = float(pi @ q_r)
                v_g1 = float(pi @ q_g)
            action = int(self.policy_rng.choice(cfg.n_actions, p=pi))
            step = env.step(action, env_rng)
            next_block = (env.state_features(step.next_state)
                          if h < cfg.horizon - 1 else None)
            episode.append((phis[action], step.reward, step.utility, next_block))
            actions.append(action)
            state = step.next_state
        for h, item in enumerate(episode):
            self.history[h].append(item)
        dual_used = self.dual
        self.dual = dual_update(self.dual, cfg.eta, threshold, v_g1, cfg.xi)
        return actions, v_r1, v_g1, dual_used


def run_both(model, realized_utility, episodes, seed, **overrides):
    cfg = AgentConfig(feature_dim=model.feature_dim, horizon=model.horizon,
                      episodes=episodes, n_actions=model.n_actions,
                      slater_gamma=1.0, **overrides)

    def streams():
        ss = np.random.SeedSequence(seed)
        env_ss, policy_ss = ss.spawn(2)
        return np.random.default_rng(env_ss), np.random.default_rng(policy_ss)

    env_rng_a, policy_rng_a = streams()
    agent = PrimalDualAgent(cfg, policy_rng_a)
    env_a = TabularEnv(model, realized_utility)

    env_rng_b, policy_rng_b = streams()
    ref = ReferenceLearner(cfg, policy_rng_b)
    env_b = TabularEnv(model, realized_utility)

    for k in range(1, episodes + 1):
        trace = agent.run_episode(env_a, env_rng_a, k)
        ref_actions, ref_vr, ref_vg, ref_dual = ref.run_episode(
            env_b, env_rng_b, model.threshold)
        assert [s.action for s in trace.steps] == ref_actions, f"episode {k}"
        assert abs(trace.v_r1 - ref_vr) < 1e-10, f"episode {k}"
        assert abs(trace.v_g1 - ref_vg) < 1e-10, f"episode {k}"
        assert abs(trace.dual - ref_dual) < 1e-10, f"episode {k}"
    # one more estimation pass so both sides fold in the final episode
    agent.backward_pass(episodes + 1)
    ref.backward()
    assert np.max(np.abs(agent.w_r - ref.w_r)) < 1e-9
    assert np.max(np.abs(agent.w_g - ref.w_g)) < 1e-9
    for h in range(cfg.horizon):
        assert np.max(np.abs(agent.gram_inv[h].inv - ref.inv[h])) < 1e-9
    assert abs(agent.dual - ref.dual) < 1e-10


def test_agent_matches_reference_on_job_scheduler():
    from pdlsvi import job_scheduler_realized_utility
    model = make_job_scheduler()
    run_both(model, job_scheduler_realized_utility, episodes=25, seed=0,
             alpha=2.0, beta=0.8)


def test_agent_matches_reference_on_random_model():
    rng = np.random.default_rng(77)
    model = make_random_cmdp(rng, n_states=4, n_actions=3, horizon=3)
    run_both(model, None, episodes=20, seed=1, alpha=1.5, beta=0.5)
