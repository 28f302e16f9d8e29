"""Batch experiment runner.

Two subcommands:

- trace: simulate a scenario end to end (solver + engine) and emit one CSV
  row per (step, mode) with the max retained posterior and pruning-mass
  diagnostics.
- sweep: measure the wall time of each mode's normalization computation as
  the object or class count grows, and fit growth curves.

Timing convention: only the normalization computation is timed; likelihood
evaluation is setup and excluded, as are the oracle's weight-table builds.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from typing import Optional, Sequence

import numpy as np

from .engine import MODES, EngineConfig, HypothesisEngine
from .errors import HybridBeliefError, NonConvergence, SingularHessian
from .oracle import (
    MAX_HYPOTHESES,
    enumerate_hypotheses,
    hypothesis_log_weights,
    log_normalizer_from_weights,
)
from .priors import generate_random_prior
from .scenario import (
    Scenario,
    generate,
    sample_distinct_assignments,
    scenario_from_json,
    scenario_to_json,
    step as scenario_step,
)
from .se2 import Pose2
from .semantics import SemanticModelParams, sample_observation
from .slam import GeometricSolver, MotionModel, TrajectorySample, draw_samples

TRACE_COLUMNS = ["step", "mode", "max_prob", "pruned_mass_bound", "pruned_mass_exact", "wall_ns"]
SWEEP_COLUMNS = ["axis", "size", "mode", "mean_wall_ns"]


def _fmt(v: float) -> str:
    """Loss-free float serialization (17 significant digits)."""
    return f"{float(v):.17g}"


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def default_modes(scn: Scenario) -> list[str]:
    if scn.prior.kind == "independent":
        return ["naive", "exact_independent", "bound"]
    if scn.n_classes**scn.n_objects <= MAX_HYPOTHESES:
        return ["naive", "oracle", "bound"]
    return ["naive", "bound"]


def _check_modes(modes: Sequence[str], scn: Scenario) -> list[str]:
    modes = list(modes)
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}; choices: {', '.join(MODES)}")
    if "exact_independent" in modes and scn.prior.kind != "independent":
        raise ValueError("mode exact_independent requires an independent prior")
    if "oracle" in modes and scn.n_classes**scn.n_objects > MAX_HYPOTHESES:
        raise ValueError(
            f"oracle mode cannot enumerate {scn.n_classes}^{scn.n_objects} hypotheses"
        )
    return modes


def _trace_rows(
    engine: HypothesisEngine, t: int, modes: Sequence[str], enumerable: bool
) -> list[dict]:
    pm_bound = engine.pruned_mass_upper_bound()
    pm_exact: Optional[float] = None
    enum_result = None
    if enumerable:
        enum_result = enumerate_hypotheses(engine.prior, engine.log_psi)
        pm_exact = enum_result.pruned_mass(engine.retained)

    rows = []
    for mode in modes:
        if mode == "naive":
            t0 = time.perf_counter_ns()
            engine.log_retained_mass()
            wall = time.perf_counter_ns() - t0
        elif mode == "exact_independent":
            t0 = time.perf_counter_ns()
            engine.exact_log_normalizer_independent()
            wall = time.perf_counter_ns() - t0
        elif mode == "bound":
            t0 = time.perf_counter_ns()
            engine.lower_bound_log_normalizer()
            wall = time.perf_counter_ns() - t0
        else:  # oracle: the weight table is maintained state, not the timed part
            _, log_w = hypothesis_log_weights(engine.prior, engine.log_psi)
            t0 = time.perf_counter_ns()
            log_normalizer_from_weights(log_w)
            wall = time.perf_counter_ns() - t0

        if mode == "oracle":
            max_prob = max(enum_result.posterior(c) for c in engine.retained)
        else:
            max_prob = max(engine.query_posterior(c, mode) for c in engine.retained)
        rows.append(
            {
                "step": t,
                "mode": mode,
                "max_prob": max_prob,
                "pruned_mass_bound": pm_bound,
                "pruned_mass_exact": pm_exact,
                "wall_ns": wall,
            }
        )
    return rows


def run_trace(
    scn: Scenario,
    modes: Optional[Sequence[str]] = None,
    n_samples: int = 100,
    q1: float = 2.0,
    q2: float = 2.0,
    sample_policy: str = "refresh",
    seed: int = 0,
    steps: Optional[int] = None,
) -> list[dict]:
    """Simulate the scenario and return one record per (step, mode)."""
    modes = _check_modes(modes if modes is not None else default_modes(scn), scn)
    n_steps = scn.n_steps if steps is None else min(steps, scn.n_steps)
    enumerable = scn.n_classes**scn.n_objects <= MAX_HYPOTHESES

    config = EngineConfig(
        q1=q1,
        q2=q2,
        n_retained=len(scn.retained),
        n_samples=n_samples,
        mode="bound",
        sample_policy=sample_policy,
    )
    engine = HypothesisEngine(scn.prior, scn.semantic_params(), config, scn.retained)
    solver = GeometricSolver(scn.waypoints[0], scn.noise.prior_cov)
    motion = MotionModel(scn.noise.odom_cov)
    sigma_b = math.sqrt(scn.noise.bearing_var)
    orientations = {i: pose.theta for i, (pose, _) in enumerate(scn.objects)}
    rng = np.random.default_rng([seed, 1])

    rows = _trace_rows(engine, 0, modes, enumerable)
    for t in range(1, n_steps + 1):
        meas = scenario_step(scn, t, rng)
        solver.add_odometry(meas.odometry, motion)
        for oid, b in meas.bearings:
            solver.add_bearing(t, oid, b, sigma_b)
        # generous iteration budget: noisy bearing-only problems can descend
        # a shallow valley for a while before the decrease drops below tol
        belief = solver.solve(max_iters=300)
        samples = draw_samples(
            belief,
            n_samples,
            seed=_derived_seed(seed, 2, t),
            object_orientations=orientations,
            n_objects=scn.n_objects,
        )
        engine.ingest_observations(t, meas.semantics, samples)
        rows.extend(_trace_rows(engine, t, modes, enumerable))
    return rows


def write_trace_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            pm_exact = row["pruned_mass_exact"]
            writer.writerow(
                [
                    row["step"],
                    row["mode"],
                    _fmt(row["max_prob"]),
                    _fmt(row["pruned_mass_bound"]),
                    "" if pm_exact is None else _fmt(pm_exact),
                    row["wall_ns"],
                ]
            )


# -- runtime sweep -------------------------------------------------------------

def _bench_instance(
    n_objects: int,
    n_classes: int,
    n_retained: int,
    n_samples: int,
    seed: int,
    steps: int = 2,
) -> HypothesisEngine:
    """Small synthetic engine state for benchmarking: a short straight
    trajectory observing every object at every step."""
    rng = np.random.default_rng(seed)
    prior = generate_random_prior(
        n_objects, n_classes, dependent=False, seed=_derived_seed(seed, 3)
    )
    params = SemanticModelParams(n_classes, sigma_s=0.1)
    robot_gt = [Pose2(0.5 * t, 0.0, 0.0) for t in range(steps + 1)]
    object_gt = [
        Pose2(
            float(rng.uniform(-1.0, 0.5 * steps + 1.0)),
            float(rng.uniform(1.5, 4.0)),
            float(rng.uniform(-math.pi, math.pi)),
        )
        for _ in range(n_objects)
    ]
    k = min(n_retained, n_classes**n_objects)
    retained = sample_distinct_assignments(n_objects, n_classes, k, set(), rng)
    config = EngineConfig(n_retained=k, n_samples=n_samples, sample_policy="frozen")
    engine = HypothesisEngine(prior, params, config, retained)

    samples = []
    for _ in range(n_samples):
        robots = [
            Pose2(p.x + 0.05 * rng.standard_normal(), p.y + 0.05 * rng.standard_normal(), p.theta)
            for p in robot_gt
        ]
        objects = [
            Pose2(p.x + 0.05 * rng.standard_normal(), p.y + 0.05 * rng.standard_normal(), p.theta)
            for p in object_gt
        ]
        samples.append(TrajectorySample(robot_poses=robots, object_poses=objects))

    true_classes = rng.integers(1, n_classes + 1, size=n_objects)
    for t in range(1, steps + 1):
        obs = [
            (oid, sample_observation(robot_gt[t], object_gt[oid], int(true_classes[oid]), params, rng))
            for oid in range(n_objects)
        ]
        engine.ingest_observations(t, obs, samples)
    return engine


def _time_mode(engine: HypothesisEngine, mode: str) -> int:
    if mode == "oracle":
        _, log_w = hypothesis_log_weights(engine.prior, engine.log_psi)
        t0 = time.perf_counter_ns()
        log_normalizer_from_weights(log_w)
        return time.perf_counter_ns() - t0
    if mode == "naive":
        fn = engine.log_retained_mass
    elif mode == "exact_independent":
        fn = engine.exact_log_normalizer_independent
    else:
        fn = engine.lower_bound_log_normalizer
    t0 = time.perf_counter_ns()
    fn()
    return time.perf_counter_ns() - t0


DEFAULT_N_SIZES = list(range(2, 13))
DEFAULT_M_SIZES = [2, 4, 8, 16, 32, 64]


def run_runtime_sweep(
    axis: str,
    sizes: Optional[Sequence[int]] = None,
    trials: int = 100,
    n_samples: int = 25,
    n_retained: int = 8,
    seed: int = 0,
    modes: Optional[Sequence[str]] = None,
) -> tuple[list[dict], dict]:
    """Mean normalization wall-time per (size, mode) plus growth-curve fits.

    axis N: objects grow at 2 classes; axis M: classes grow at 3 objects.
    Returns (rows, fits) where fits[mode] holds the exponential base from a
    log-linear fit against size and the polynomial degree from a log-log fit.
    """
    if axis not in ("N", "M"):
        raise ValueError("axis must be 'N' or 'M'")
    sizes = list(sizes) if sizes else (DEFAULT_N_SIZES if axis == "N" else DEFAULT_M_SIZES)
    modes = list(modes) if modes else ["naive", "exact_independent", "bound", "oracle"]
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}")

    rows = []
    means: dict[str, list[float]] = {m: [] for m in modes}
    for size in sizes:
        n_objects, n_classes = (size, 2) if axis == "N" else (3, size)
        if "oracle" in modes and n_classes**n_objects > MAX_HYPOTHESES:
            raise ValueError(f"oracle cannot enumerate {n_classes}^{n_objects} hypotheses")
        totals = {m: 0 for m in modes}
        for trial in range(trials):
            engine = _bench_instance(
                n_objects,
                n_classes,
                n_retained,
                n_samples,
                seed=_derived_seed(seed, 4, size, trial),
            )
            for m in modes:
                totals[m] += _time_mode(engine, m)
        for m in modes:
            mean_ns = totals[m] / trials
            means[m].append(mean_ns)
            rows.append({"axis": axis, "size": size, "mode": m, "mean_wall_ns": mean_ns})

    fits = {}
    x = np.asarray(sizes, dtype=float)
    for m in modes:
        t = np.asarray(means[m])
        exp_slope = np.polyfit(x, np.log(t), 1)[0]
        poly_slope = np.polyfit(np.log(x), np.log(t), 1)[0]
        fits[m] = {"exp_base": float(np.exp(exp_slope)), "poly_degree": float(poly_slope)}
    return rows, fits


def write_sweep_csv(rows: Sequence[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow(
                [row["axis"], row["size"], row["mode"], _fmt(row["mean_wall_ns"])]
            )


# -- argument parsing ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbsim", description="hybrid-belief simulation experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("trace", help="confidence trace over a simulated run")
    tr.add_argument("--objects", type=int, default=5)
    tr.add_argument("--classes", type=int, default=3)
    tr.add_argument("--prior", choices=["independent", "dependent"], default="dependent")
    tr.add_argument("--placement", choices=["in", "out"], default="in")
    tr.add_argument("--nin", type=int, default=8, help="retained-set size")
    tr.add_argument("--samples", type=int, default=100, help="trajectory samples")
    tr.add_argument("--steps", type=int, default=None)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--q1", type=float, default=2.0)
    tr.add_argument("--q2", type=float, default=2.0)
    tr.add_argument("--modes", default=None, help="comma list; default picked by prior kind")
    tr.add_argument("--sample-policy", choices=["frozen", "refresh"], default="refresh")
    tr.add_argument("--scenario-in", default=None, help="load scenario JSON instead of generating")
    tr.add_argument("--scenario-out", default=None, help="write the scenario JSON")
    tr.add_argument("--out", required=True, help="trace CSV path")

    sw = sub.add_parser("sweep", help="normalization runtime vs problem size")
    sw.add_argument("--axis", choices=["N", "M"], required=True)
    sw.add_argument("--sizes", default=None, help="comma list of sizes")
    sw.add_argument("--trials", type=int, default=100)
    sw.add_argument("--samples", type=int, default=25)
    sw.add_argument("--nin", type=int, default=8)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--modes", default=None, help="comma list")
    sw.add_argument("--out", required=True, help="sweep CSV path")
    sw.add_argument("--summary-out", default=None, help="JSON with fitted growth curves")
    return parser


def _run_trace_command(args: argparse.Namespace) -> None:
    if args.scenario_in:
        with open(args.scenario_in) as fh:
            scn = scenario_from_json(fh.read())
    else:
        scn = generate(
            n_objects=args.objects,
            n_classes=args.classes,
            seed=args.seed,
            placement=args.placement,
            dependent_prior=args.prior == "dependent",
            n_retained=args.nin,
        )
    if args.scenario_out:
        with open(args.scenario_out, "w") as fh:
            fh.write(scenario_to_json(scn))
    modes = args.modes.split(",") if args.modes else None
    rows = run_trace(
        scn,
        modes=modes,
        n_samples=args.samples,
        q1=args.q1,
        q2=args.q2,
        sample_policy=args.sample_policy,
        seed=args.seed,
        steps=args.steps,
    )
    write_trace_csv(rows, args.out)


def _run_sweep_command(args: argparse.Namespace) -> None:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    modes = args.modes.split(",") if args.modes else None
    rows, fits = run_runtime_sweep(
        axis=args.axis,
        sizes=sizes,
        trials=args.trials,
        n_samples=args.samples,
        n_retained=args.nin,
        seed=args.seed,
        modes=modes,
    )
    write_sweep_csv(rows, args.out)
    if args.summary_out:
        with open(args.summary_out, "w") as fh:
            json.dump({"axis": args.axis, "fits": fits}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "trace":
            _run_trace_command(args)
        else:
            _run_sweep_command(args)
    except (NonConvergence, SingularHessian) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (HybridBeliefError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
