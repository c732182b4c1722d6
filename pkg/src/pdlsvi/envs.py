"""Finite-horizon tabular constrained MDPs and an episodic sampler.

A model carries per-step transition, reward, and expected-utility tables plus
a utility threshold b. The sampler plays one episode at a time and hands back
realized rewards and utilities; features are the canonical one-hot embedding
of (state, action) pairs, so linear function approximation is exact here.
"""

from dataclasses import dataclass, field
import json

import numpy as np

_SUM_TOL = 1e-9
FORMAT_NAME = "tabular-cmdp-v1"


@dataclass
class TabularCMDP:
    """Tabular episodic CMDP with index order [h][s][a][s'] for transitions
    and [h][s][a] for reward/utility tables.

    transition : (H, S, A, S) row-stochastic in its last axis
    reward     : (H, S, A) in [0, 1]
    utility    : (H, S, A) in [0, 1], expected utility per (h, s, a)
    threshold  : b, the constraint level; feasible policies have V_g >= b
    """

    transition: np.ndarray
    reward: np.ndarray
    utility: np.ndarray
    initial_state: int
    threshold: float
    _eye: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.transition = np.asarray(self.transition, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        self.utility = np.asarray(self.utility, dtype=float)
        H, S, A, S2 = self.transition.shape
        if S2 != S:
            raise ValueError("transition must have shape (H, S, A, S)")
        if self.reward.shape != (H, S, A) or self.utility.shape != (H, S, A):
            raise ValueError("reward/utility tables must have shape (H, S, A)")
        row_sums = self.transition.sum(axis=3)
        if np.any(np.abs(row_sums - 1.0) > _SUM_TOL):
            raise ValueError("transition rows must sum to 1")
        if np.any(self.transition < 0):
            raise ValueError("transition probabilities must be nonnegative")
        for name, tab in (("reward", self.reward), ("utility", self.utility)):
            if np.any(tab < 0) or np.any(tab > 1):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if not 0 <= self.initial_state < S:
            raise ValueError("initial_state out of range")
        if not 0 < self.threshold <= H:
            raise ValueError("threshold must lie in (0, H]")
        self._eye = np.eye(S * A)

    @property
    def horizon(self) -> int:
        return self.transition.shape[0]

    @property
    def n_states(self) -> int:
        return self.transition.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[2]

    @property
    def feature_dim(self) -> int:
        return self.n_states * self.n_actions

    def features(self, state: int, action: int) -> np.ndarray:
        """One-hot feature of (state, action); unit norm by construction."""
        if not 0 <= state < self.n_states:
            raise ValueError(f"state {state} out of range")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range")
        return self._eye[state * self.n_actions + action]

    def state_features(self, state: int) -> np.ndarray:
        """(A, d) block of features for every action at one state."""
        if not 0 <= state < self.n_states:
            raise ValueError(f"state {state} out of range")
        a = self.n_actions
        return self._eye[state * a : (state + 1) * a]

    def feature_tensor(self) -> np.ndarray:
        """(S, A, d) features for the whole state-action space."""
        return self._eye.reshape(self.n_states, self.n_actions, self.feature_dim)


@dataclass
class EpisodeStep:
    state: int
    action: int
    reward: float
    utility: float
    next_state: int


class TabularEnv:
    """Episodic sampler for a TabularCMDP.

    Rewards come from the model table. Utilities default to the model table
    as well; environments whose utility is realized per transition (rather
    than known per state-action) pass `realized_utility(s, a, s')`.
    """

    def __init__(self, model: TabularCMDP, realized_utility=None):
        self.model = model
        self.realized_utility = realized_utility
        self._state = model.initial_state
        self._h = 1  # 1-indexed step about to be taken

    @property
    def state(self) -> int:
        return self._state

    @property
    def step_index(self) -> int:
        return self._h

    def state_features(self, state: int) -> np.ndarray:
        return self.model.state_features(state)

    def reset(self) -> int:
        self._state = self.model.initial_state
        self._h = 1
        return self._state

    def step(self, action: int, rng: np.random.Generator) -> EpisodeStep:
        m = self.model
        if self._h > m.horizon:
            raise RuntimeError(f"episode already has {m.horizon} steps; reset first")
        if not 0 <= action < m.n_actions:
            raise ValueError(f"action {action} out of range")
        s = self._state
        p = m.transition[self._h - 1, s, action]
        s_next = int(rng.choice(m.n_states, p=p))
        reward = float(m.reward[self._h - 1, s, action])
        if self.realized_utility is None:
            utility = float(m.utility[self._h - 1, s, action])
        else:
            utility = float(self.realized_utility(s, action, s_next))
        self._state = s_next
        self._h += 1
        return EpisodeStep(s, action, reward, utility, s_next)


def make_job_scheduler() -> TabularCMDP:
    """Single-server job scheduler: 10 job states, send-or-wait actions.

    State x in 0..9 counts outstanding jobs, starting at 9. Action 1 submits
    two jobs: both finish w.p. 0.8, one w.p. 0.1, none w.p. 0.1 (completion
    clamps at zero jobs). Action 0 leaves the queue alone. Reward prefers
    waiting, and submission is much more expensive during steps 3..6 (peak
    hours). Utility counts completed jobs at half weight, so clearing the
    whole queue is worth 4.5; the constraint demands at least 4.
    """
    S, A, H = 10, 2, 10
    trans = np.zeros((S, A, S))
    for x in range(S):
        trans[x, 0, x] = 1.0
        trans[x, 1, max(x - 2, 0)] += 0.8
        trans[x, 1, max(x - 1, 0)] += 0.1
        trans[x, 1, x] += 0.1
    transition = np.broadcast_to(trans, (H, S, A, S)).copy()

    reward = np.ones((H, S, A))
    for h in range(1, H + 1):
        reward[h - 1, :, 1] = 0.1 if 3 <= h <= 6 else 0.8

    # expected utility: sum_x' P(x'|x,a) (x - x')/2
    drop = np.arange(S)[:, None] - np.arange(S)[None, :]
    utility_sa = np.einsum("xas,xs->xa", trans, drop / 2.0)
    utility = np.broadcast_to(utility_sa, (H, S, A)).copy()

    return TabularCMDP(
        transition=transition,
        reward=reward,
        utility=utility,
        initial_state=9,
        threshold=4.0,
    )


def job_scheduler_realized_utility(s: int, a: int, s_next: int) -> float:
    """Jobs completed this step at half weight: (x - x')/2."""
    return (s - s_next) / 2.0


def make_env(name: str) -> TabularEnv:
    """Builtin environments by name."""
    if name == "job-scheduler":
        return TabularEnv(make_job_scheduler(), job_scheduler_realized_utility)
    raise ValueError(f"unknown builtin environment {name!r}")


BUILTIN_ENVS = ("job-scheduler",)


def save_model(model: TabularCMDP, path: str) -> None:
    """Write a model as JSON with flattened row-major tables.

    Field names are fixed: format, n_states, n_actions, horizon,
    initial_state, threshold, transition ([h][s][a][s'] order), reward and
    utility ([h][s][a] order). Floats round-trip exactly through JSON.
    """
    doc = {
        "format": FORMAT_NAME,
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "horizon": model.horizon,
        "initial_state": model.initial_state,
        "threshold": model.threshold,
        "transition": [float(v) for v in model.transition.reshape(-1)],
        "reward": [float(v) for v in model.reward.reshape(-1)],
        "utility": [float(v) for v in model.utility.reshape(-1)],
    }
    with open(path, "w") as f:
        json.dump(doc, f)
        f.write("\n")


def load_model(path: str) -> TabularCMDP:
    """Read a model written by save_model; validates on construction."""
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"unrecognized model format {doc.get('format')!r}")
    H, S, A = doc["horizon"], doc["n_states"], doc["n_actions"]
    return TabularCMDP(
        transition=np.array(doc["transition"]).reshape(H, S, A, S),
        reward=np.array(doc["reward"]).reshape(H, S, A),
        utility=np.array(doc["utility"]).reshape(H, S, A),
        initial_state=doc["initial_state"],
        threshold=doc["threshold"],
    )
