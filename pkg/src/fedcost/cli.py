"""Command line harness: estimate | optimize | simulate | sweep | tradeoff.

Every command reads one YAML config (all fields defaulted, see config
module), honors --seed/--gamma/--output/--workers overrides, writes CSV
artifacts into the output directory, and prints a text or --json report.
Outputs contain no timestamps and iterate in deterministic order, so a
replay with identical config and seed is byte-identical.

Exit codes: 0 success, 2 config/schema error, 3 a requested loss level
was unreachable, 4 the optimizer did not converge (trace still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import ExperimentConfig, build_runtime, default_config, load_config
from .core import (
    BoundParams,
    ConfigError,
    ControlPoint,
    CostWeights,
    EstimationError,
    UnreachableLossError,
    derive_seed,
)
from .estimation import estimate_ratio, planted_round_counts, probe_pair
from .optimizer import acs_optimize
from .simulation import measure_cost_to_target

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNREACHABLE = 3
EXIT_NO_CONVERGENCE = 4


def _fmt(value) -> str:
    """Stable CSV field formatting: shortest round-trip repr for floats."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _emit(report: dict, as_json: bool, text_lines: list[str]) -> None:
    if as_json:
        print(json.dumps(report, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_config()
    updates = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        updates["seed"] = args.seed
    if args.gamma is not None:
        if not 0.0 <= args.gamma <= 1.0:
            raise ConfigError("--gamma must lie in [0, 1]")
        updates["gamma"] = args.gamma
    if args.output is not None:
        updates["output_dir"] = args.output
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        updates["workers"] = args.workers
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    os.makedirs(config.output_dir, exist_ok=True)
    return config


def cmd_estimate(args) -> int:
    config = _load(args)
    est = config.estimation
    n = config.population.n
    samples = []
    if est.planted is not None:
        for k, e in est.probes:
            rounds_fa, rounds_fb = planted_round_counts(
                k, e, n, est.planted.a0, est.planted.b0, est.f_a, est.f_b,
                est.planted.f_star, est.planted.d,
            )
            from .estimation import EstimationSample

            samples.append(
                EstimationSample(k=float(k), e=float(e), rounds_to_fa=rounds_fa,
                                 rounds_to_fb=rounds_fb, seed=config.seed)
            )
    else:
        _, _, sim = build_runtime(config)
        for idx, (k, e) in enumerate(est.probes):
            seed = derive_seed(config.seed, "probe", k, e, idx)
            samples.append(probe_pair(sim, k, e, est.f_a, est.f_b, est.max_rounds, seed))

    estimate = estimate_ratio(samples, n)
    overhead_iterations = sum(s.rounds_to_fb * s.e for s in samples)
    rows = [[s.k, s.e, s.rounds_to_fa, s.rounds_to_fb, s.seed] for s in samples]
    _write_csv(
        os.path.join(config.output_dir, "estimation_samples.csv"),
        ["k", "e", "rounds_fa", "rounds_fb", "seed"],
        rows,
    )
    report = {
        "rho": estimate.rho,
        "pairs_used": estimate.pairs_used,
        "pairs_discarded": estimate.pairs_discarded,
        "overhead_iterations": overhead_iterations,
        "probes": [
            {"k": s.k, "e": s.e, "rounds_fa": s.rounds_to_fa, "rounds_fb": s.rounds_to_fb}
            for s in samples
        ],
        "mode": "planted" if est.planted is not None else "probe",
    }
    lines = [
        f"estimated bound ratio rho = {estimate.rho!r} "
        f"({estimate.pairs_used} pairs used, {estimate.pairs_discarded} discarded)",
        f"overhead iterations spent probing = {overhead_iterations:g}",
    ] + [
        f"  probe k={s.k:g} e={s.e:g}: rounds to f_a {s.rounds_to_fa:g}, to f_b {s.rounds_to_fb:g}"
        for s in samples
    ]
    _emit(report, args.json, lines)
    return EXIT_OK


def _require_rho(config: ExperimentConfig) -> float:
    if config.bound.rho is None:
        raise ConfigError("bound.rho is required here; set it or run `estimate` first")
    return config.bound.rho


def _bound_from_config(config: ExperimentConfig) -> BoundParams:
    rho = _require_rho(config)
    if config.bound.a0 is not None:
        return BoundParams(
            ratio_rho=rho, a0=config.bound.a0, b0=config.bound.b0, epsilon=config.bound.epsilon
        )
    return BoundParams.from_ratio(rho, epsilon=config.bound.epsilon)


def cmd_optimize(args) -> int:
    config = _load(args)
    bound = _bound_from_config(config)
    means = config.population.means
    init = None
    if config.optimizer.init is not None:
        init = ControlPoint(k=config.optimizer.init[0], e=config.optimizer.init[1])
    trace = acs_optimize(
        means,
        CostWeights(config.gamma),
        bound,
        n=config.population.n,
        eps0=config.optimizer.eps0,
        max_iters=config.optimizer.max_iters,
        init=init,
    )
    rows = [
        [i, point.k, point.e, value]
        for i, (point, value) in enumerate(zip(trace.iterates, trace.objectives))
    ]
    _write_csv(
        os.path.join(config.output_dir, "acs_trace.csv"),
        ["iteration", "k", "e", "objective"],
        rows,
    )
    report = {
        "k_star": trace.k_star,
        "e_star": trace.e_star,
        "objective": trace.objective_star,
        "objective_is_relative": trace.relative,
        "converged": trace.converged,
        "iterations": len(trace.iterates) - 1,
        "gamma": config.gamma,
        "rho": bound.ratio_rho,
    }
    scale_note = " (relative scale)" if trace.relative else ""
    lines = [
        f"gamma={config.gamma:g}: k*={trace.k_star}, e*={trace.e_star}, "
        f"objective={trace.objective_star!r}{scale_note}, "
        f"{'converged' if trace.converged else 'NOT converged'} "
        f"in {len(trace.iterates) - 1} iterations"
    ]
    _emit(report, args.json, lines)
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


def _run_record_rows(record) -> list[list]:
    rows = []
    cum_t = record.cumulative_time_s
    cum_e = record.cumulative_energy_j
    for i in range(record.rounds):
        rows.append(
            [
                i + 1,
                float(record.losses[i]),
                float(record.round_times_s[i]),
                float(record.round_energies_j[i]),
                float(cum_t[i]),
                float(cum_e[i]),
            ]
        )
    return rows


_RUN_HEADER = ["round", "loss", "round_time_s", "round_energy_j", "cumulative_time_s", "cumulative_energy_j"]


def cmd_simulate(args) -> int:
    config = _load(args)
    _, _, sim = build_runtime(config)
    k, e = config.simulate.point
    weights = CostWeights(config.gamma)
    all_reached = True
    per_seed = []
    for i in range(config.simulate.n_seeds):
        seed = derive_seed(config.seed, "simulate", k, e, i)
        record = sim.run(
            k, e, seed=seed,
            target_loss=config.training.target_loss,
            max_rounds=config.training.max_rounds,
        )
        _write_csv(
            os.path.join(config.output_dir, f"fed_run_seed{i}.csv"),
            _RUN_HEADER,
            _run_record_rows(record),
        )
        cost = measure_cost_to_target(record, weights, require_reached=False)
        all_reached &= record.reached_target
        per_seed.append(
            {
                "seed_index": i,
                "reached_target": record.reached_target,
                "rounds": record.rounds,
                "time_s": cost.time_s,
                "energy_j": cost.energy_j,
                "weighted_cost": cost.weighted_total,
                "final_loss": float(record.losses[-1]),
            }
        )
    report = {
        "k": k,
        "e": e,
        "gamma": config.gamma,
        "target_loss": config.training.target_loss,
        "runs": per_seed,
        "all_reached": all_reached,
    }
    lines = [
        f"simulate k={k} e={e} target={config.training.target_loss:g} gamma={config.gamma:g}"
    ] + [
        f"  seed {r['seed_index']}: {'reached' if r['reached_target'] else 'DID NOT reach'} "
        f"target in {r['rounds']} rounds, time {r['time_s']:.2f}s, energy {r['energy_j']:.4f}J, "
        f"cost {r['weighted_cost']:.4f}"
        for r in per_seed
    ]
    _emit(report, args.json, lines)
    return EXIT_OK if all_reached else EXIT_UNREACHABLE


_WORKER_STATE: dict = {}


def _sweep_worker_init(config: ExperimentConfig) -> None:
    _WORKER_STATE["sim"] = build_runtime(config)[2]
    _WORKER_STATE["config"] = config


def _sweep_worker_run(task: tuple[int, int, int]) -> tuple:
    k, e, idx = task
    config = _WORKER_STATE["config"]
    sim = _WORKER_STATE["sim"]
    seed = derive_seed(config.seed, "sweep-run", k, e, idx)
    record = sim.run(
        k, e, seed=seed,
        target_loss=config.training.target_loss,
        max_rounds=config.training.max_rounds,
    )
    return (
        k, e, idx,
        record.reached_target,
        record.rounds,
        float(record.round_times_s.sum()),
        float(record.round_energies_j.sum()),
    )


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """Run the configured (k, e) grid and aggregate per cell.

    Results are deterministic and independent of the worker count: run
    seeds are derived from (seed, k, e, repetition), never from order.
    """
    tasks = [
        (k, e, i)
        for k in config.sweep.k_values
        for e in config.sweep.e_values
        for i in range(config.sweep.seeds_per_cell)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(
            max_workers=config.workers,
            initializer=_sweep_worker_init,
            initargs=(config,),
        ) as pool:
            outcomes = list(pool.map(_sweep_worker_run, tasks, chunksize=1))
    else:
        _sweep_worker_init(config)
        try:
            outcomes = [_sweep_worker_run(t) for t in tasks]
        finally:
            _WORKER_STATE.clear()

    by_cell: dict[tuple[int, int], list[tuple]] = {}
    for outcome in outcomes:
        by_cell.setdefault((outcome[0], outcome[1]), []).append(outcome)

    weights = CostWeights(config.gamma)
    cells = []
    for k in config.sweep.k_values:
        for e in config.sweep.e_values:
            runs = by_cell[(k, e)]
            done = [r for r in runs if r[3]]
            cell = {
                "k": k,
                "e": e,
                "seeds": len(runs),
                "completed": len(done),
            }
            if done:
                cell["mean_rounds"] = sum(r[4] for r in done) / len(done)
                cell["mean_time_s"] = sum(r[5] for r in done) / len(done)
                cell["mean_energy_j"] = sum(r[6] for r in done) / len(done)
                cell["mean_weighted_cost"] = (
                    weights.time_weight * cell["mean_time_s"]
                    + weights.energy_weight * cell["mean_energy_j"]
                )
            cells.append(cell)

    eligible = [c for c in cells if c["completed"] == c["seeds"] and c["seeds"] > 0]
    if eligible:
        best = min(eligible, key=lambda c: (c["mean_weighted_cost"], c["k"], c["e"]))
        for c in cells:
            c["is_argmin"] = c is best
    else:
        for c in cells:
            c["is_argmin"] = False
    return cells


def cmd_sweep(args) -> int:
    config = _load(args)
    cells = run_sweep(config)
    rows = []
    for c in cells:
        rows.append(
            [
                c["k"], c["e"], c["seeds"], c["completed"],
                c.get("mean_rounds", ""), c.get("mean_time_s", ""),
                c.get("mean_energy_j", ""), c.get("mean_weighted_cost", ""),
                int(c["is_argmin"]),
            ]
        )
    _write_csv(
        os.path.join(config.output_dir, "sweep.csv"),
        ["k", "e", "seeds", "completed", "mean_rounds", "mean_time_s",
         "mean_energy_j", "mean_weighted_cost", "is_argmin"],
        rows,
    )
    argmin = next((c for c in cells if c["is_argmin"]), None)
    report = {"gamma": config.gamma, "cells": cells, "argmin": argmin}
    lines = [f"sweep over {len(cells)} cells at gamma={config.gamma:g}"]
    if argmin is None:
        lines.append("  no cell completed on every seed; no argmin")
    else:
        lines.append(
            f"  empirical best: k={argmin['k']} e={argmin['e']} "
            f"mean cost {argmin['mean_weighted_cost']:.4f} over {argmin['completed']} runs"
        )
    incomplete = [c for c in cells if c["completed"] < c["seeds"]]
    if incomplete:
        lines.append(f"  {len(incomplete)} cell(s) had incomplete runs and were excluded")
    _emit(report, args.json, lines)
    return EXIT_OK


def cmd_tradeoff(args) -> int:
    config = _load(args)
    bound = _bound_from_config(config)
    means = config.population.means
    _, _, sim = build_runtime(config)
    run_cache: dict[tuple[int, int, int], tuple] = {}
    rows = []
    report_rows = []
    failures = []
    for gamma in config.tradeoff.gammas:
        try:
            trace = acs_optimize(
                means, CostWeights(float(gamma)), bound,
                n=config.population.n,
                eps0=config.optimizer.eps0,
                max_iters=config.optimizer.max_iters,
            )
            k_star, e_star = trace.k_star, trace.e_star
            reached, times, energies, rounds = 0, [], [], []
            for i in range(config.tradeoff.seeds_per_gamma):
                key = (k_star, e_star, i)
                if key not in run_cache:
                    seed = derive_seed(config.seed, "tradeoff-run", k_star, e_star, i)
                    record = sim.run(
                        k_star, e_star, seed=seed,
                        target_loss=config.training.target_loss,
                        max_rounds=config.training.max_rounds,
                    )
                    run_cache[key] = (
                        record.reached_target,
                        record.rounds,
                        float(record.round_times_s.sum()),
                        float(record.round_energies_j.sum()),
                    )
                ok, n_rounds, t, en = run_cache[key]
                if ok:
                    reached += 1
                    rounds.append(n_rounds)
                    times.append(t)
                    energies.append(en)
            if reached == 0:
                raise UnreachableLossError(
                    f"no run at (k={k_star}, e={e_star}) reached the target"
                )
            mean_t = sum(times) / reached
            mean_e = sum(energies) / reached
            cost = (1.0 - gamma) * mean_t + gamma * mean_e
            row = {
                "gamma": float(gamma),
                "k_star": k_star,
                "e_star": e_star,
                "completed": reached,
                "seeds": config.tradeoff.seeds_per_gamma,
                "mean_rounds": sum(rounds) / reached,
                "mean_time_s": mean_t,
                "mean_energy_j": mean_e,
                "mean_weighted_cost": cost,
            }
            rows.append(
                [row["gamma"], k_star, e_star, row["seeds"], reached,
                 row["mean_rounds"], mean_t, mean_e, cost]
            )
            report_rows.append(row)
        except (UnreachableLossError, ArithmeticError, ValueError) as exc:
            failures.append({"gamma": float(gamma), "error": str(exc)})
    _write_csv(
        os.path.join(config.output_dir, "tradeoff.csv"),
        ["gamma", "k_star", "e_star", "seeds", "completed", "mean_rounds",
         "mean_time_s", "mean_energy_j", "mean_weighted_cost"],
        rows,
    )
    report = {"points": report_rows, "failures": failures}
    lines = ["time/energy trade-off sweep"]
    for row in report_rows:
        lines.append(
            f"  gamma={row['gamma']:g}: (k*={row['k_star']}, e*={row['e_star']}) "
            f"time {row['mean_time_s']:.1f}s energy {row['mean_energy_j']:.4f}J "
            f"cost {row['mean_weighted_cost']:.4f}"
        )
    for failure in failures:
        lines.append(f"  gamma={failure['gamma']:g}: FAILED ({failure['error']})")
    _emit(report, args.json, lines)
    return EXIT_OK if report_rows else EXIT_UNREACHABLE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcost",
        description="Estimate convergence-bound constants, optimize clients-per-round and "
        "local iterations, and simulate federated training cost.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "estimate": (cmd_estimate, "run loss-crossing probes and estimate the bound ratio"),
        "optimize": (cmd_optimize, "run the alternating optimizer for (k*, e*)"),
        "simulate": (cmd_simulate, "run federated training at a fixed (k, e)"),
        "sweep": (cmd_sweep, "measure realized cost over a (k, e) grid"),
        "tradeoff": (cmd_tradeoff, "trace optimized cost across gamma values"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="YAML config file (defaults apply)")
        p.add_argument("--seed", type=int, metavar="U64", help="override config seed")
        p.add_argument("--gamma", type=float, metavar="F", help="override time/energy weight")
        p.add_argument("--output", metavar="DIR", help="override output directory")
        p.add_argument("--workers", type=int, metavar="N", help="parallel worker processes")
        p.add_argument("--json", action="store_true", help="print a JSON report")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnreachableLossError as exc:
        print(f"unreachable loss: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
