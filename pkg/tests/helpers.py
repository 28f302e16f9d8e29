"""Shared builders for the randomized engine instances used across the test
suite, plus the from-scratch accumulator recomputation the incremental
identities are checked against.

Everything here is deliberately simple and direct: observation histories are
replayed record by record, hypothesis products are formed by explicit
indexing, and prior sums go through power_sum_subset. The engine's
incremental bookkeeping must land on the same numbers.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from hybrid_belief.engine import EngineConfig, HypothesisEngine
from hybrid_belief.priors import generate_random_prior
from hybrid_belief.scenario import sample_distinct_assignments
from hybrid_belief.se2 import Pose2
from hybrid_belief.semantics import (
    SemanticModelParams,
    log_likelihood_all_classes,
    sample_observation,
)
from hybrid_belief.slam import TrajectorySample


def straight_line_world(
    rng: np.random.Generator, n_steps: int, n_objects: int
) -> tuple[list[Pose2], list[Pose2]]:
    """Ground truth for synthetic engine tests: the robot walks right, the
    objects sit scattered alongside the path with random headings."""
    robots = [
        Pose2(0.7 * t, 0.0, float(rng.uniform(-0.3, 0.3))) for t in range(n_steps + 1)
    ]
    objects = [
        Pose2(
            float(rng.uniform(-1.0, 0.7 * n_steps + 1.0)),
            float(rng.uniform(1.0, 4.0)),
            float(rng.uniform(-math.pi, math.pi)),
        )
        for _ in range(n_objects)
    ]
    return robots, objects


def perturbed_samples(
    rng: np.random.Generator,
    robots: list[Pose2],
    objects: list[Pose2],
    n_samples: int,
    jitter: float = 0.05,
) -> list[TrajectorySample]:
    """Trajectory samples scattered around the ground truth, standing in for
    draws from a solved geometric belief."""
    out = []
    for _ in range(n_samples):
        r = [
            Pose2(
                p.x + jitter * rng.standard_normal(),
                p.y + jitter * rng.standard_normal(),
                p.theta + 0.4 * jitter * rng.standard_normal(),
            )
            for p in robots
        ]
        o = [
            Pose2(
                p.x + jitter * rng.standard_normal(),
                p.y + jitter * rng.standard_normal(),
                p.theta,
            )
            for p in objects
        ]
        out.append(TrajectorySample(robot_poses=r, object_poses=o))
    return out


def build_random_engine(
    rng: np.random.Generator,
    n_objects: int,
    n_classes: int,
    *,
    dependent: bool,
    n_retained: int,
    n_samples: int,
    n_steps: int,
    q1: float = 2.0,
    q2: float = 2.0,
    sigma_s: float = 0.3,
    sample_policy: str = "frozen",
    capacity: int | None = None,
    obs_prob: float = 0.7,
) -> tuple[HypothesisEngine, list[TrajectorySample]]:
    """Random prior, random retained set, and a short ingested observation
    history at fixed perturbed samples."""
    prior = generate_random_prior(
        n_objects, n_classes, dependent, seed=int(rng.integers(2**31))
    )
    params = SemanticModelParams(n_classes, sigma_s)
    robots, objects = straight_line_world(rng, n_steps, n_objects)
    samples = perturbed_samples(rng, robots, objects, n_samples)
    k = min(n_retained, n_classes**n_objects)
    retained = sample_distinct_assignments(n_objects, n_classes, k, set(), rng)
    config = EngineConfig(
        q1=q1,
        q2=q2,
        n_retained=k if capacity is None else capacity,
        n_samples=n_samples,
        sample_policy=sample_policy,
    )
    engine = HypothesisEngine(prior, params, config, retained)

    true_classes = rng.integers(1, n_classes + 1, size=n_objects)
    for t in range(1, n_steps + 1):
        observed = [oid for oid in range(n_objects) if rng.uniform() < obs_prob]
        obs = [
            (
                oid,
                sample_observation(
                    robots[t], objects[oid], int(true_classes[oid]), params, rng
                ),
            )
            for oid in observed
        ]
        engine.ingest_observations(t, obs, samples)
    return engine, samples


def recompute_accumulators(engine: HypothesisEngine) -> dict:
    """Every incrementally maintained quantity, rebuilt from the stored
    observation history and the retained set alone."""
    s = engine.config.n_samples
    n, m = engine.n_objects, engine.n_classes
    q1, q2 = engine.config.q1, engine.config.q2

    log_psi = np.zeros((s, n, m))
    for rec in engine.history:
        log_psi[:, rec.object_id, :] += log_likelihood_all_classes(
            rec.z, rec.robot_states, rec.object_states, engine.semantic_params
        )
    log_s = logsumexp(q2 * log_psi, axis=2)

    retained = engine.retained
    log_w = np.empty((s, len(retained)))
    cols = np.arange(n)
    for j, c in enumerate(retained):
        log_w[:, j] = log_psi[:, cols, np.asarray(c) - 1].sum(axis=1)

    return {
        "log_psi": log_psi,
        "log_s": log_s,
        "log_w": log_w,
        "log_phi": q2 * log_w,
        "s0_in": engine.prior.power_sum_subset(retained, q1),
        "s0_all": engine.prior.power_sum_all(q1),
    }


def assert_accumulators_match(engine: HypothesisEngine, rtol: float = 1e-9) -> None:
    """Engine accumulators against the from-scratch recomputation."""
    ref = recompute_accumulators(engine)
    np.testing.assert_allclose(engine.log_psi, ref["log_psi"], rtol=rtol, atol=rtol)
    np.testing.assert_allclose(engine.log_s, ref["log_s"], rtol=rtol, atol=rtol)
    np.testing.assert_allclose(engine.log_w, ref["log_w"], rtol=rtol, atol=rtol)
    np.testing.assert_allclose(engine.log_phi, ref["log_phi"], rtol=rtol, atol=rtol)
    np.testing.assert_allclose(engine.s0_in, ref["s0_in"], rtol=rtol, atol=0)
    np.testing.assert_allclose(engine.s0_all, ref["s0_all"], rtol=rtol, atol=0)
