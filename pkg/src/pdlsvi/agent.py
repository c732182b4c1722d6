"""Optimistic primal-dual least-squares value iteration with soft-max policies.

Each episode rebuilds, per step h from the horizon down, ridge estimates of
the reward and utility Q-functions from every stored transition, adds a
confidence-width bonus, clips at H, and mixes the two criteria with the
current dual variable inside a soft-max policy. The rollout follows that
policy; afterwards the dual variable takes a projected ascent step on the
constraint gap. Value targets are recomputed from scratch every episode (no
stale bootstrapping), which is what makes the per-step estimates order-free.

The replay groups transitions by the environment's state identity: repeated
visits to the same state contribute the same feature rows, so the per-episode
target sums collapse to per-state value evaluations weighted by visit counts.
This is an exact regrouping of the same sums, not an approximation, and it
keeps the per-episode cost independent of the episode index.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .envs import EpisodeStep, TabularEnv
from .linalg import (
    GramInverse,
    RidgeAccumulator,
    bonus_quadratic_form,
    bonus_quadratic_form_batch,
    gram_inverse_init,
    gram_inverse_rank_one_update,
    ridge_solve,
)


@dataclass
class AgentConfig:
    """Run-length-aware agent parameters.

    alpha, eta, beta, xi are overrides; leave None to use the schedule
    derived from (d, H, K, |A|, gamma, zeta, c1, failure_prob):

        xi    = 2H/gamma, or 4H/gamma when the constraint is tightened
        alpha = log|A| * K / (2 (1 + xi + H))
        eta   = xi / sqrt(K H^2)
        beta  = c1 * d * H * sqrt(log(log|A| * 4 d K H / failure_prob))
    """

    feature_dim: int
    horizon: int
    episodes: int
    n_actions: int
    slater_gamma: float
    lam: float = 1.0
    c1: float = 1.0
    failure_prob: float = 0.1
    tighten_zeta: float = 0.0
    alpha: float | None = None
    eta: float | None = None
    beta: float | None = None
    xi: float | None = None

    def __post_init__(self):
        if min(self.feature_dim, self.horizon, self.episodes, self.n_actions) < 1:
            raise ValueError("dimensions, horizon, episodes, actions must be >= 1")
        if self.lam <= 0 or self.c1 <= 0:
            raise ValueError("lam and c1 must be positive")
        if not 0 < self.failure_prob < 1:
            raise ValueError("failure_prob must lie in (0, 1)")
        if self.slater_gamma <= 0:
            raise ValueError("slater_gamma must be positive")
        if self.tighten_zeta < 0:
            raise ValueError("tighten_zeta must be nonnegative")
        if self.tighten_zeta > self.slater_gamma / 2 + 1e-12:
            raise ValueError("tighten_zeta must not exceed slater_gamma / 2")

        H, K, A, d = self.horizon, self.episodes, self.n_actions, self.feature_dim
        if self.xi is None:
            scale = 4.0 if self.tighten_zeta > 0 else 2.0
            self.xi = scale * H / self.slater_gamma
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")
        if self.alpha is None:
            if A < 2:
                raise ValueError("derived alpha needs n_actions >= 2; pass alpha")
            self.alpha = math.log(A) * K / (2.0 * (1.0 + self.xi + H))
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.eta is None:
            self.eta = self.xi / math.sqrt(K * H * H)
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.beta is None:
            if A < 2:
                raise ValueError("derived beta needs n_actions >= 2; pass beta")
            iota = math.log(math.log(A) * 4.0 * d * K * H / self.failure_prob)
            self.beta = self.c1 * d * H * math.sqrt(iota)
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


def q_value(w: np.ndarray, g: GramInverse, beta: float, phi: np.ndarray,
            horizon: int) -> float:
    """Optimistic Q estimate min(<w, phi> + beta * width, H)."""
    return float(min(w @ phi + beta * bonus_quadratic_form(g, phi), horizon))


def q_values_batch(w: np.ndarray, g: GramInverse, beta: float, phis: np.ndarray,
                   horizon: int) -> np.ndarray:
    return np.minimum(phis @ w + beta * bonus_quadratic_form_batch(g, phis), horizon)


def softmax_policy(q_r: np.ndarray, q_g: np.ndarray, dual: float,
                   alpha: float) -> np.ndarray:
    """Soft-max distribution over actions for the composite Q_r + dual * Q_g."""
    z = alpha * (q_r + dual * q_g)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def v_value(policy: np.ndarray, q: np.ndarray) -> float:
    return float(policy @ q)


def dual_update(y: float, eta: float, b_effective: float, v_g1: float,
                xi: float) -> float:
    """Projected ascent step on the constraint gap, clipped to [0, xi]."""
    return float(min(max(y + eta * (b_effective - v_g1), 0.0), xi))


@dataclass
class EpisodeTrace:
    steps: list
    v_r1: float   # backward-pass estimate of the episode policy's reward value
    v_g1: float   # same for utility; this is what the dual update consumed
    dual: float   # dual variable in force during this episode


@dataclass
class PolicySnapshot:
    """Everything needed to reproduce the policy a given episode played."""

    w_r: np.ndarray
    w_g: np.ndarray
    gram_inv: list
    dual: float
    episode: int


class _StateRegistry:
    """Stable indices for distinct environment states and their features."""

    def __init__(self, n_actions: int, feature_dim: int):
        self.n_actions = n_actions
        self.feature_dim = feature_dim
        self.index = {}
        self._cap = 8
        self.features = np.zeros((self._cap * n_actions, feature_dim))

    @property
    def n(self) -> int:
        return len(self.index)

    def sa_matrix(self) -> np.ndarray:
        return self.features[: self.n * self.n_actions]

    def add(self, key, phi_per_action: np.ndarray) -> int:
        idx = self.index.get(key)
        if idx is not None:
            return idx
        idx = len(self.index)
        if idx >= self._cap:
            self._cap *= 2
            grown = np.zeros((self._cap * self.n_actions, self.feature_dim))
            grown[: idx * self.n_actions] = self.features[: idx * self.n_actions]
            self.features = grown
        a = self.n_actions
        self.features[idx * a : (idx + 1) * a] = phi_per_action
        self.index[key] = idx
        return idx


class PrimalDualAgent:
    """Mutable learner state plus the per-episode procedures."""

    def __init__(self, config: AgentConfig, policy_rng: np.random.Generator):
        self.config = config
        self.policy_rng = policy_rng
        d, H = config.feature_dim, config.horizon
        self.gram_inv = [gram_inverse_init(d, config.lam) for _ in range(H)]
        self.w_r = np.zeros((H, d))
        self.w_g = np.zeros((H, d))
        self.dual = 0.0
        self.episodes_done = 0
        self.registry = _StateRegistry(config.n_actions, d)
        self.phi_reward_sums = np.zeros((H, d))
        self.phi_utility_sums = np.zeros((H, d))
        # counts[h][s*A + a, s'] over registry indices; step H-1 never needs one
        self._counts = [np.zeros((0, 0)) for _ in range(max(H - 1, 0))]
        self.snapshot: PolicySnapshot | None = None

    # -- estimation ---------------------------------------------------------

    def _grow_counts(self) -> None:
        cap = self.registry._cap
        a = self.config.n_actions
        for h, cnt in enumerate(self._counts):
            if cnt.shape[1] < cap:
                grown = np.zeros((cap * a, cap))
                grown[: cnt.shape[0], : cnt.shape[1]] = cnt
                self._counts[h] = grown

    def backward_pass(self, k: int):
        """Recompute all weight vectors for episode k and return the value
        tables (V_r, V_g), each (H, n) over the registry's n known states."""
        if k != self.episodes_done + 1:
            raise ValueError(f"episode index {k} does not follow {self.episodes_done}")
        cfg = self.config
        H, A = cfg.horizon, cfg.n_actions
        n = self.registry.n
        F = self.registry.sa_matrix()
        v_r_tab = np.zeros((H, n))
        v_g_tab = np.zeros((H, n))
        v_next_r = np.zeros(n)
        v_next_g = np.zeros(n)
        for h in range(H - 1, -1, -1):
            tgt_r = self.phi_reward_sums[h]
            tgt_g = self.phi_utility_sums[h]
            if h < H - 1 and n > 0:
                cnt = self._counts[h][: n * A, :n]
                tgt_r = tgt_r + F.T @ (cnt @ v_next_r)
                tgt_g = tgt_g + F.T @ (cnt @ v_next_g)
            acc = RidgeAccumulator(reward=tgt_r, utility=tgt_g)
            self.w_r[h] = ridge_solve(self.gram_inv[h], acc, "reward")
            self.w_g[h] = ridge_solve(self.gram_inv[h], acc, "utility")
            if n > 0:
                q_r = q_values_batch(self.w_r[h], self.gram_inv[h], cfg.beta, F, H)
                q_g = q_values_batch(self.w_g[h], self.gram_inv[h], cfg.beta, F, H)
                z = cfg.alpha * (q_r + self.dual * q_g)
                z = z.reshape(n, A)
                z -= z.max(axis=1, keepdims=True)
                e = np.exp(z)
                pi = e / e.sum(axis=1, keepdims=True)
                v_next_r = np.einsum("na,na->n", pi, q_r.reshape(n, A))
                v_next_g = np.einsum("na,na->n", pi, q_g.reshape(n, A))
                v_r_tab[h] = v_next_r
                v_g_tab[h] = v_next_g
        return v_r_tab, v_g_tab

    def _policy_at(self, h: int, phi_per_action: np.ndarray):
        cfg = self.config
        q_r = q_values_batch(self.w_r[h], self.gram_inv[h], cfg.beta,
                             phi_per_action, cfg.horizon)
        q_g = q_values_batch(self.w_g[h], self.gram_inv[h], cfg.beta,
                             phi_per_action, cfg.horizon)
        return q_r, q_g, softmax_policy(q_r, q_g, self.dual, cfg.alpha)

    def act(self, phi_per_action: np.ndarray, h: int,
            rng: np.random.Generator) -> int:
        """Sample an action from the episode policy at step h (0-indexed)."""
        _, _, pi = self._policy_at(h, phi_per_action)
        return int(rng.choice(len(pi), p=pi))

    # -- experience ---------------------------------------------------------

    def _absorb(self, steps: list, phi_blocks: list) -> None:
        cfg = self.config
        A = cfg.n_actions
        state_idx = []
        for step, phis in zip(steps, phi_blocks):
            state_idx.append(self.registry.add(step.state, phis))
        self._grow_counts()
        for h, step in enumerate(steps):
            phi = phi_blocks[h][step.action]
            self.phi_reward_sums[h] += phi * step.reward
            self.phi_utility_sums[h] += phi * step.utility
            if h < len(steps) - 1:
                sa = state_idx[h] * A + step.action
                self._counts[h][sa, state_idx[h + 1]] += 1.0
            self.gram_inv[h] = gram_inverse_rank_one_update(self.gram_inv[h], phi)

    def run_episode(self, env: TabularEnv, env_rng: np.random.Generator,
                    k: int) -> EpisodeTrace:
        """One full episode: estimate, snapshot, roll out, absorb, dual step."""
        cfg = self.config
        self.backward_pass(k)
        self.snapshot = PolicySnapshot(
            w_r=self.w_r.copy(),
            w_g=self.w_g.copy(),
            gram_inv=[GramInverse(g.inv.copy(), g.lam, g.count) for g in self.gram_inv],
            dual=self.dual,
            episode=k,
        )
        state = env.reset()
        steps = []
        phi_blocks = []
        v_r1 = v_g1 = 0.0
        for h in range(cfg.horizon):
            phis = env.state_features(state)
            q_r, q_g, pi = self._policy_at(h, phis)
            if h == 0:
                v_r1 = v_value(pi, q_r)
                v_g1 = v_value(pi, q_g)
            action = int(self.policy_rng.choice(cfg.n_actions, p=pi))
            step = env.step(action, env_rng)
            steps.append(step)
            phi_blocks.append(phis)
            state = step.next_state
        self._absorb(steps, phi_blocks)
        dual_used = self.dual
        b_effective = env.model.threshold + cfg.tighten_zeta
        self.dual = dual_update(self.dual, cfg.eta, b_effective, v_g1, cfg.xi)
        self.episodes_done = k
        return EpisodeTrace(steps=steps, v_r1=v_r1, v_g1=v_g1, dual=dual_used)

    # -- inspection ---------------------------------------------------------

    def snapshot_policy(self, feature_tensor: np.ndarray) -> np.ndarray:
        """Materialize the last snapshot's policy over a full (S, A, d) space."""
        if self.snapshot is None:
            raise RuntimeError("no episode has been played yet")
        snap = self.snapshot
        cfg = self.config
        S, A, d = feature_tensor.shape
        F = feature_tensor.reshape(S * A, d)
        pi = np.empty((cfg.horizon, S, A))
        for h in range(cfg.horizon):
            q_r = q_values_batch(snap.w_r[h], snap.gram_inv[h], cfg.beta, F,
                                 cfg.horizon)
            q_g = q_values_batch(snap.w_g[h], snap.gram_inv[h], cfg.beta, F,
                                 cfg.horizon)
            z = cfg.alpha * (q_r + snap.dual * q_g)
            z = z.reshape(S, A)
            z -= z.max(axis=1, keepdims=True)
            e = np.exp(z)
            pi[h] = e / e.sum(axis=1, keepdims=True)
        return pi
