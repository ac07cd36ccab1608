"""Command-line pipeline around the grid-game experiment.

Subcommands: gen-expert, sample, recover, evaluate, experiment, bound.
Exit codes: 0 success, 2 configuration error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .equilibrium import nash_gap, nash_value_iteration
from .errors import ConfigError, ConvergenceError
from .estimation import (
    ConfidenceParams,
    CountBook,
    GenerativeOracle,
    estimate,
    sample_round,
    stopping_time,
    theoretical_sample_bound,
    uniform_sampling,
)
from .experiment import BOUND_COLUMNS, ExperimentConfig, run_experiment, write_csv
from .gridworld import GridGameSpec, build_grid_game, variant_spec
from .reward_select import DISTANCE_TO_RANDOM, behavior_cloning, max_gap_reward
from .textio import parse_config, read_sections, write_sections

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def _load_config(args) -> ExperimentConfig:
    if args.config:
        config = parse_config(args.config)
    else:
        config = ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    return config


def _expert(config: ExperimentConfig):
    spec = GridGameSpec(variant="deterministic", gamma=config.gamma, rmax=config.rmax)
    game, reward, index = build_grid_game(spec)
    result = nash_value_iteration(game, reward)
    if not result.converged:
        raise ConvergenceError("expert synthesis did not converge")
    return spec, game, reward, result


def cmd_gen_expert(config: ExperimentConfig) -> int:
    _, game, reward, result = _expert(config)
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "expert.txt")
    write_sections(path, game=game, reward=reward, policy=result.policy)
    gap = nash_gap(game, reward, result.policy).gap
    print(f"expert written to {path} (equilibrium gap {gap:.3e})")
    return EXIT_OK


def cmd_sample(config: ExperimentConfig) -> int:
    _, game, _, result = _expert(config)
    params = ConfidenceParams(
        delta=config.delta, pi_min=config.pi_min, rmax=config.rmax, gamma=config.gamma
    )
    oracle = GenerativeOracle(game, result.policy, seed=config.seeds[0])
    os.makedirs(config.out_dir, exist_ok=True)
    log_path = os.path.join(config.out_dir, "run_log.csv")
    run = uniform_sampling(oracle, params, config.epsilon, config.k_max, log_path=log_path)
    est_path = os.path.join(config.out_dir, "estimated.txt")
    write_sections(
        est_path,
        game=run.problem.as_game(config.gamma, game.mu),
        policy=run.problem.pi_hat,
    )
    print(f"tau = {run.tau}, converged = {run.converged}; log at {log_path}")
    if not run.converged:
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_recover(config: ExperimentConfig) -> int:
    _, game, _, result = _expert(config)
    seed = config.seeds[0]
    oracle = GenerativeOracle(game, result.policy, seed=seed)
    counts = CountBook(game.n_states, game.action_counts)
    for _ in range(config.k_max):
        sample_round(oracle, counts)
    problem = estimate(counts)
    est_game = problem.as_game(config.gamma, game.mu)
    recovered = max_gap_reward(
        est_game,
        problem.pi_hat,
        config.rmax,
        mode=config.mode,
        seed=seed if config.mode == DISTANCE_TO_RANDOM else None,
        reward_class=config.reward_class,
    )
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "recovered_reward.txt")
    write_sections(
        path,
        reward=recovered.reward,
        provenance={
            "seed": seed,
            "mode": recovered.mode,
            "margin": float(recovered.margins.min()),
            "solver_iterations": recovered.lp_iterations + recovered.projection_sweeps,
        },
    )
    print(f"recovered reward written to {path} (margins {recovered.margins})")
    return EXIT_OK


def cmd_evaluate(config: ExperimentConfig, reward_path: str | None) -> int:
    base, game, det_reward, result = _expert(config)
    path = reward_path or os.path.join(config.out_dir, "recovered_reward.txt")
    if not os.path.exists(path):
        raise ConfigError(f"recovered reward not found at {path}; run `recover` first")
    recovered = read_sections(path)["reward"]
    bc_policy = behavior_cloning(result.policy)
    rows = []
    for name in config.variants:
        alt_game, alt_reward, _ = build_grid_game(variant_spec(base, name))
        transferred = nash_value_iteration(alt_game, recovered).policy
        gap_mairl = nash_gap(alt_game, alt_reward, transferred).gap
        gap_bc = nash_gap(alt_game, alt_reward, bc_policy).gap
        rows.append((name, gap_mairl, gap_bc))
        print(f"{name}: mairl gap {gap_mairl:.6g}, bc gap {gap_bc:.6g}")
    os.makedirs(config.out_dir, exist_ok=True)
    out = os.path.join(config.out_dir, "evaluate.csv")
    write_csv(out, ("variant", "nash_gap_mairl", "nash_gap_bc"), rows)
    print(f"written to {out}")
    return EXIT_OK


def cmd_experiment(config: ExperimentConfig) -> int:
    result = run_experiment(config)
    print(f"curve: {result.paths['curve']}")
    print(f"bound: {result.paths['bound']}")
    if result.errors:
        print(f"{len(result.errors)} seed(s) failed; see {result.paths['errors']}")
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_bound(config: ExperimentConfig) -> int:
    spec = GridGameSpec(variant="deterministic", gamma=config.gamma, rmax=config.rmax)
    game, _, _ = build_grid_game(spec)
    params = ConfidenceParams(
        delta=config.delta, pi_min=config.pi_min, rmax=config.rmax, gamma=config.gamma
    )
    bound = theoretical_sample_bound(
        params, game.n_states, game.action_counts, game.n_agents, config.epsilon
    )
    tau = stopping_time(
        params, game.n_states, game.action_counts, game.n_agents, config.epsilon
    )
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "bound.csv")
    row = (
        game.n_states,
        game.n_agents,
        game.n_joint_actions,
        config.gamma,
        config.rmax,
        config.epsilon,
        config.delta,
        config.pi_min,
        bound.total,
        -1 if tau is None else tau,
    )
    write_csv(path, BOUND_COLUMNS, [row])
    print(
        f"theoretical bound {bound.total:.6g} "
        f"(transition {bound.transition_term:.6g}, policy {bound.policy_term:.6g}); "
        f"empirical tau {row[-1]}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mairl", description="Grid-game reward recovery pipeline"
    )
    parser.add_argument("--config", help="experiment config file ([experiment] section)")
    parser.add_argument("--seed", type=int, help="override: run a single seed")
    parser.add_argument("--out-dir", help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-expert", help="synthesize and write the grid expert")
    sub.add_parser("sample", help="run uniform sampling until the stopping rule")
    sub.add_parser("recover", help="sample k_max rounds and select a reward")
    eval_p = sub.add_parser("evaluate", help="score a recovered reward across variants")
    eval_p.add_argument("--reward", help="path to a recovered reward file")
    sub.add_parser("experiment", help="full multi-seed transfer experiment")
    sub.add_parser("bound", help="theoretical sample bound vs deterministic stopping round")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "gen-expert":
            return cmd_gen_expert(config)
        if args.command == "sample":
            return cmd_sample(config)
        if args.command == "recover":
            return cmd_recover(config)
        if args.command == "evaluate":
            return cmd_evaluate(config, args.reward)
        if args.command == "experiment":
            return cmd_experiment(config)
        if args.command == "bound":
            return cmd_bound(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
