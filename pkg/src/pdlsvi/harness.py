"""Experiment harness: run the learner on a model, score every episode's
policy with the exact oracles, and write per-episode CSV traces.

Regret for episode k is V* - V_r(pi_k) where V* comes from the occupancy LP
at the model's original threshold b, in every mode. Violation increments are
b - V_g(pi_k), accumulated signed; the reported positive part is the positive
part of that running sum. In zero-violation mode the dual update chases the
tightened level b + zeta while the metrics stay pinned to b.
"""

from dataclasses import dataclass, field, asdict
import json
import logging
import math
import os
import time

import numpy as np

from .agent import AgentConfig, PrimalDualAgent
from .envs import (
    TabularCMDP,
    TabularEnv,
    job_scheduler_realized_utility,
    load_model,
    make_job_scheduler,
)
from .oracle import PolicyValues, policy_eval_dp, slater_margin, solve_occupancy_lp

log = logging.getLogger("pdlsvi")

CSV_COLUMNS = (
    "episode",
    "cumulative_regret",
    "cumulative_violation_signed",
    "cumulative_violation_positive_part",
    "dual_Y",
    "wall_time_s",
)


@dataclass
class RunConfig:
    env: str = "job-scheduler"  # builtin name or path to a model JSON file
    episodes: int = 1000
    seeds: tuple = ()           # explicit seeds; empty means range(trials)
    trials: int = 1
    gamma: float = 1.0          # Slater margin the parameter schedule assumes
    zero_violation: bool = False
    zeta: float | None = None   # tightening; derived when zero_violation is set
    zeta_scale: float = 1.0
    lam: float = 1.0
    c1: float = 1.0
    failure_prob: float = 0.1
    alpha: float | None = None
    eta: float | None = None
    beta: float | None = None
    xi: float | None = None
    out_dir: str | None = None  # write CSVs and summary here when set
    timing: bool = False        # per-episode wall time; off keeps reruns byte-identical
    log_level: str = "warning"

    def resolved_seeds(self) -> tuple:
        if self.seeds:
            if self.trials not in (1, len(self.seeds)) :
                raise ValueError("trials disagrees with the explicit seed list")
            return tuple(int(s) for s in self.seeds)
        return tuple(range(self.trials))


@dataclass
class TrialMetrics:
    """Per-episode traces for one seed."""

    seed: int
    episode: np.ndarray
    cumulative_regret: np.ndarray
    cumulative_violation_signed: np.ndarray
    cumulative_violation_positive_part: np.ndarray
    dual: np.ndarray
    wall_time: np.ndarray


@dataclass
class AggregateReport:
    episode: np.ndarray
    means: dict
    stds: dict
    regret_ratio: float          # mean cumulative regret at K over at floor(K/2)
    regret_over_sqrt_k: np.ndarray


@dataclass
class RunResult:
    config: RunConfig
    optimal_value: float
    true_margin: float
    gamma_exceeds_margin: bool
    zeta: float
    agent_params: dict
    trials: list
    report: AggregateReport
    out_files: list = field(default_factory=list)


def resolve_env(name: str):
    """Builtin name or model-file path -> (model, realized utility or None)."""
    if name == "job-scheduler":
        return make_job_scheduler(), job_scheduler_realized_utility
    if os.path.exists(name):
        return load_model(name), None
    raise ValueError(f"{name!r} is neither a builtin environment nor a file")


def evaluate_policy_snapshot(agent: PrimalDualAgent, model: TabularCMDP,
                             k: int | None = None,
                             feature_tensor: np.ndarray | None = None) -> PolicyValues:
    """Exact oracle values of the policy the agent played last.

    The snapshot holds the weights, Gram inverses, and dual variable that were
    in force during the episode, before that episode's own data was folded in.
    """
    if agent.snapshot is None:
        raise RuntimeError("agent has not played an episode yet")
    if k is not None and agent.snapshot.episode != k:
        raise ValueError(f"snapshot is for episode {agent.snapshot.episode}, not {k}")
    if feature_tensor is None:
        feature_tensor = model.feature_tensor()
    policy = agent.snapshot_policy(feature_tensor)
    return policy_eval_dp(model, policy)


def _resolve_zeta(config: RunConfig, horizon: int) -> float:
    if config.zeta is not None:
        zeta = float(config.zeta)
    elif config.zero_violation:
        zeta = config.zeta_scale * math.sqrt(config.episodes * horizon) / config.episodes
    else:
        zeta = 0.0
    cap = config.gamma / 2.0
    if zeta > cap:
        log.warning("zeta %.6g exceeds gamma/2, clamping to %.6g", zeta, cap)
        zeta = cap
    return zeta


def run_trial(model: TabularCMDP, realized_utility, agent_config: AgentConfig,
              seed: int, optimal_value: float, timing: bool = False) -> TrialMetrics:
    """One seed: run every episode and score each snapshot exactly."""
    ss = np.random.SeedSequence(seed)
    env_ss, policy_ss = ss.spawn(2)
    env_rng = np.random.default_rng(env_ss)
    policy_rng = np.random.default_rng(policy_ss)

    env = TabularEnv(model, realized_utility)
    agent = PrimalDualAgent(agent_config, policy_rng)
    feature_tensor = model.feature_tensor()
    b = model.threshold
    K = agent_config.episodes

    regret = np.zeros(K)
    signed = np.zeros(K)
    pos_part = np.zeros(K)
    dual = np.zeros(K)
    wall = np.zeros(K)
    cum_regret = 0.0
    cum_signed = 0.0
    t0 = time.perf_counter()
    for k in range(1, K + 1):
        trace = agent.run_episode(env, env_rng, k)
        values = evaluate_policy_snapshot(agent, model, k, feature_tensor)
        cum_regret += optimal_value - values.reward_value
        cum_signed += b - values.utility_value
        regret[k - 1] = cum_regret
        signed[k - 1] = cum_signed
        pos_part[k - 1] = max(cum_signed, 0.0)
        dual[k - 1] = trace.dual
        if timing:
            wall[k - 1] = time.perf_counter() - t0
    return TrialMetrics(
        seed=seed,
        episode=np.arange(1, K + 1),
        cumulative_regret=regret,
        cumulative_violation_signed=signed,
        cumulative_violation_positive_part=pos_part,
        dual=dual,
        wall_time=wall,
    )


def summarize(trials: list) -> AggregateReport:
    """Mean/std across trials per episode plus sublinearity diagnostics."""
    if not trials:
        raise ValueError("no trials to summarize")
    K = len(trials[0].episode)
    fields_ = {
        "cumulative_regret": np.stack([t.cumulative_regret for t in trials]),
        "cumulative_violation_signed": np.stack(
            [t.cumulative_violation_signed for t in trials]),
        "cumulative_violation_positive_part": np.stack(
            [t.cumulative_violation_positive_part for t in trials]),
        "dual_Y": np.stack([t.dual for t in trials]),
        "wall_time_s": np.stack([t.wall_time for t in trials]),
    }
    means = {name: arr.mean(axis=0) for name, arr in fields_.items()}
    stds = {name: arr.std(axis=0) for name, arr in fields_.items()}
    mean_regret = means["cumulative_regret"]
    half = mean_regret[K // 2 - 1] if K >= 2 else np.nan
    ratio = float(mean_regret[-1] / half) if K >= 2 and half != 0 else float("nan")
    over_sqrt = mean_regret / np.sqrt(np.arange(1, K + 1))
    return AggregateReport(
        episode=trials[0].episode.copy(),
        means=means,
        stds=stds,
        regret_ratio=ratio,
        regret_over_sqrt_k=over_sqrt,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trial_csv(path: str, tm: TrialMetrics) -> None:
    cols = (tm.episode, tm.cumulative_regret, tm.cumulative_violation_signed,
            tm.cumulative_violation_positive_part, tm.dual, tm.wall_time)
    with open(path, "w") as f:
        f.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(len(tm.episode)):
            row = [str(int(tm.episode[i]))] + [_fmt(c[i]) for c in cols[1:]]
            f.write(",".join(row) + "\n")


def write_aggregate_csv(path: str, report: AggregateReport) -> None:
    names = list(report.means)
    header = ["episode"]
    for name in names:
        header += [f"{name}_mean", f"{name}_std"]
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for i in range(len(report.episode)):
            row = [str(int(report.episode[i]))]
            for name in names:
                row += [_fmt(report.means[name][i]), _fmt(report.stds[name][i])]
            f.write(",".join(row) + "\n")


def run_experiment(config: RunConfig) -> RunResult:
    """Full experiment: oracle baselines, all trials, aggregation, output."""
    logging.basicConfig()
    log.setLevel(config.log_level.upper())

    model, realized_utility = resolve_env(config.env)
    H = model.horizon
    lp = solve_occupancy_lp(model)  # InfeasibleModelError propagates: no baseline
    margin = slater_margin(model)
    gamma_exceeds = config.gamma > margin + 1e-12
    if gamma_exceeds:
        log.warning("configured gamma %.6g exceeds the true Slater margin %.6g",
                    config.gamma, margin)
    zeta = _resolve_zeta(config, H)

    agent_config = AgentConfig(
        feature_dim=model.feature_dim,
        horizon=H,
        episodes=config.episodes,
        n_actions=model.n_actions,
        slater_gamma=config.gamma,
        lam=config.lam,
        c1=config.c1,
        failure_prob=config.failure_prob,
        tighten_zeta=zeta,
        alpha=config.alpha,
        eta=config.eta,
        beta=config.beta,
        xi=config.xi,
    )
    agent_params = {
        "alpha": agent_config.alpha,
        "eta": agent_config.eta,
        "beta": agent_config.beta,
        "xi": agent_config.xi,
        "lam": agent_config.lam,
        "c1": agent_config.c1,
        "zeta": zeta,
    }
    log.info("V*=%.6f margin=%.6f params=%s", lp.value, margin, agent_params)

    trials = []
    for seed in config.resolved_seeds():
        log.info("trial seed=%d starting", seed)
        trials.append(run_trial(model, realized_utility, agent_config, seed,
                                lp.value, timing=config.timing))
    report = summarize(trials)

    out_files = []
    if config.out_dir is not None:
        os.makedirs(config.out_dir, exist_ok=True)
        for tm in trials:
            path = os.path.join(config.out_dir, f"trial-seed{tm.seed}.csv")
            write_trial_csv(path, tm)
            out_files.append(path)
        agg_path = os.path.join(config.out_dir, "aggregate.csv")
        write_aggregate_csv(agg_path, report)
        out_files.append(agg_path)
        summary = {
            "config": {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in asdict(config).items()},
            "optimal_value": lp.value,
            "true_slater_margin": margin,
            "gamma_exceeds_margin": gamma_exceeds,
            "agent_params": agent_params,
            "final": {
                "cumulative_regret_mean": float(report.means["cumulative_regret"][-1]),
                "cumulative_violation_signed_mean": float(
                    report.means["cumulative_violation_signed"][-1]),
                "cumulative_violation_positive_part_mean": float(
                    report.means["cumulative_violation_positive_part"][-1]),
                "regret_ratio": report.regret_ratio,
            },
        }
        sum_path = os.path.join(config.out_dir, "summary.json")
        with open(sum_path, "w") as f:
            json.dump(summary, f, indent=2)
            f.write("\n")
        out_files.append(sum_path)

    return RunResult(
        config=config,
        optimal_value=lp.value,
        true_margin=margin,
        gamma_exceeds_margin=gamma_exceeds,
        zeta=zeta,
        agent_params=agent_params,
        trials=trials,
        report=report,
        out_files=out_files,
    )
