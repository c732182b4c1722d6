"""Command-line front end for the experiment harness.

Flags mirror the keys of a JSON config file (underscored names); flags given
on the command line override file values, which override built-in defaults.
"""

import argparse
import json

from .harness import RunConfig, run_experiment


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pdlsvi",
        description="Primal-dual LSVI on a constrained MDP with exact scoring.",
    )
    p.add_argument("--config", help="JSON file with any of the option names below")
    p.add_argument("--env", help="builtin name (job-scheduler) or model JSON path")
    p.add_argument("--episodes", "-K", type=int, help="episodes per trial")
    p.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    p.add_argument("--trials", type=int, help="number of trials (seeds 0..n-1)")
    p.add_argument("--gamma", type=float, help="assumed Slater margin")
    p.add_argument("--zero-violation", action="store_true", default=None,
                   help="tighten the constraint so violations vanish")
    p.add_argument("--zeta", type=float, help="explicit constraint tightening")
    p.add_argument("--zeta-scale", type=float,
                   help="scale for the derived zero-violation tightening")
    p.add_argument("--alpha", type=float, help="soft-max temperature override")
    p.add_argument("--eta", type=float, help="dual step size override")
    p.add_argument("--beta", type=float, help="bonus multiplier override")
    p.add_argument("--xi", type=float, help="dual clip override")
    p.add_argument("--lam", type=float, help="ridge regularizer")
    p.add_argument("--c1", type=float, help="bonus constant in the beta schedule")
    p.add_argument("--failure-prob", type=float, help="confidence parameter")
    p.add_argument("--out", help="directory for CSV traces and summary.json")
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall time per episode (reruns stop being byte-identical)")
    p.add_argument("--log-level", help="debug, info, warning, or error")
    return p


_KEYMAP = {
    "env": "env", "episodes": "episodes", "seeds": "seeds", "trials": "trials",
    "gamma": "gamma", "zero_violation": "zero_violation", "zeta": "zeta",
    "zeta_scale": "zeta_scale", "alpha": "alpha", "eta": "eta", "beta": "beta",
    "xi": "xi", "lam": "lam", "c1": "c1", "failure_prob": "failure_prob",
    "out": "out_dir", "timing": "timing", "log_level": "log_level",
}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        with open(args.config) as f:
            file_values = json.load(f)
        for key, val in file_values.items():
            if key not in _KEYMAP:
                raise ValueError(f"unknown config key {key!r}")
            values[_KEYMAP[key]] = val
    for key, field_name in _KEYMAP.items():
        val = getattr(args, key, None)
        if val is not None:
            values[field_name] = val
    if isinstance(values.get("seeds"), str):
        values["seeds"] = tuple(int(s) for s in values["seeds"].split(",") if s)
    elif "seeds" in values:
        values["seeds"] = tuple(int(s) for s in values["seeds"])
    if "seeds" in values and "trials" not in values:
        values["trials"] = len(values["seeds"]) or 1
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    result = run_experiment(config)
    rep = result.report
    print(f"environment: {config.env}   V* = {result.optimal_value:.6f}   "
          f"Slater margin = {result.true_margin:.6f}")
    if result.gamma_exceeds_margin:
        print(f"warning: gamma {config.gamma} exceeds the true margin")
    print(f"episodes: {config.episodes}   trials: {len(result.trials)}   "
          f"zeta: {result.zeta:.6g}")
    print(f"final mean cumulative regret: {rep.means['cumulative_regret'][-1]:.4f}")
    print("final mean cumulative violation (signed): "
          f"{rep.means['cumulative_violation_signed'][-1]:.4f}")
    print("final mean cumulative violation (positive part): "
          f"{rep.means['cumulative_violation_positive_part'][-1]:.4f}")
    print(f"regret ratio K vs K/2: {rep.regret_ratio:.4f}")
    for path in result.out_files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
