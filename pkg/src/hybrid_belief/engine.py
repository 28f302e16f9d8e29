"""Core of the library: the hybrid-belief hypothesis engine.

The engine tracks a small retained set of joint class assignments together
with the per-sample semantic statistics needed to answer "how much posterior
mass did pruning throw away?" three ways:

- naive: renormalize over the retained set only (overconfident),
- exact_independent: exact normalizer for independent priors, using the
  sum/product swap that turns the M^N-term sum into N sums of M terms,
- bound: a guaranteed normalizer lower bound from Hoelder's inequality,
  maintained incrementally through observations and retained-set edits.

All semantic expectations are taken over a fixed batch of trajectory samples
from the geometric belief; all products of likelihoods live in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AlreadyRetained,
    CapacityExceeded,
    DuplicateObservation,
    NotRetained,
    UnknownObject,
    WrongPriorKind,
)
from .numerics import CONSERVATIVE_INFLATION, log_diff_exp, logmeanexp, logsumexp
from .oracle import enumerate_hypotheses
from .priors import (
    DependentPrior,
    IndependentPrior,
    PriorModel,
    validate_assignment,
)
from .semantics import (
    SemanticModelParams,
    SemanticObservation,
    log_likelihood_all_classes,
)

MODES = ("naive", "exact_independent", "bound", "oracle")
SAMPLE_POLICIES = ("frozen", "refresh")


@dataclass(frozen=True)
class EngineConfig:
    """Engine knobs: Hoelder exponents, capacities, mode, sample handling."""

    q1: float = 2.0
    q2: float = 2.0
    n_retained: int = 8
    n_samples: int = 100
    mode: str = "bound"
    sample_policy: str = "refresh"

    def __post_init__(self) -> None:
        if self.q1 < 1.0 or self.q2 < 1.0:
            raise ValueError("exponents must be >= 1")
        if abs(1.0 / self.q1 + 1.0 / self.q2 - 1.0) > 1e-9:
            raise ValueError("exponents must satisfy 1/q1 + 1/q2 = 1 within 1e-9")
        if self.n_retained < 1:
            raise ValueError("n_retained must be >= 1")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.sample_policy not in SAMPLE_POLICIES:
            raise ValueError(f"sample_policy must be one of {SAMPLE_POLICIES}")


@dataclass
class ObservationRecord:
    """One ingested semantic observation plus the pose samples it was last
    evaluated at (kept so tests can recompute every accumulator from scratch)."""

    t: int
    object_id: int
    z: SemanticObservation
    robot_states: np.ndarray  # (n_samples, 3), robot pose at time t per sample
    object_states: np.ndarray  # (n_samples, 3), object pose per sample


def _sample_arrays(samples, n_objects: int, min_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack trajectory samples into (S, T, 3) robot and (S, N, 3) object arrays."""
    robot = np.array([[p.as_array() for p in s.robot_poses] for s in samples])
    objects = np.array([[p.as_array() for p in s.object_poses] for s in samples])
    if robot.ndim != 3 or robot.shape[1] < min_len:
        raise ValueError(f"trajectory samples must contain a pose for time {min_len - 1}")
    if objects.shape[1] != n_objects:
        raise ValueError(f"samples carry {objects.shape[1]} objects, engine has {n_objects}")
    return robot, objects


class HypothesisEngine:
    """Retained-set posterior bookkeeping over fixed trajectory samples.

    Owns the prior (the bound's prior-power sums are bound to it) and the
    semantic model parameters (to evaluate likelihood factors on ingest).
    """

    def __init__(
        self,
        prior: PriorModel,
        semantic_params: SemanticModelParams,
        config: EngineConfig = EngineConfig(),
        retained: Sequence[Sequence[int]] = (),
    ) -> None:
        if semantic_params.n_classes != prior.n_classes:
            raise ValueError("semantic model and prior disagree on class count")
        self.prior = prior
        self.semantic_params = semantic_params
        self.config = config

        n, m, s = prior.n_objects, prior.n_classes, config.n_samples
        self._obj_idx = np.arange(n)
        # running log psi(n, c) per sample; psi = 1 before any observation
        self._log_psi = np.zeros((s, n, m))
        # running log s_n = log sum_c psi^q2(n, c) per sample
        self._log_s = np.full((s, n), math.log(m))
        self._history: list[ObservationRecord] = []

        self._retained: list[tuple] = []
        self._retained_idx: dict[tuple, int] = {}
        self._log_w = np.zeros((s, 0))  # power-1 log prod_n psi(n, c_n)
        self._log_phi = np.zeros((s, 0))  # q2-powered version for the bound
        self._log_priors: list[float] = []  # log P0(C) per retained hypothesis
        self._prior_powers: list[float] = []  # P0(C)^q1, cached for O(1) removal

        self._s0_all = prior.power_sum_all(config.q1)
        self._s0_in = 0.0
        self.last_time = -1
        for c in retained:
            self._append_hypothesis(validate_assignment(c, n, m))

    # -- read-only views for tests and callers ------------------------------

    @property
    def n_objects(self) -> int:
        return self.prior.n_objects

    @property
    def n_classes(self) -> int:
        return self.prior.n_classes

    @property
    def retained(self) -> list[tuple]:
        return list(self._retained)

    @property
    def log_psi(self) -> np.ndarray:
        return self._log_psi.copy()

    @property
    def log_s(self) -> np.ndarray:
        return self._log_s.copy()

    @property
    def log_w(self) -> np.ndarray:
        return self._log_w.copy()

    @property
    def log_phi(self) -> np.ndarray:
        return self._log_phi.copy()

    @property
    def s0_all(self) -> float:
        return self._s0_all

    @property
    def s0_in(self) -> float:
        return self._s0_in

    @property
    def history(self) -> list[ObservationRecord]:
        return list(self._history)

    def observation_times(self, object_id: int) -> list[int]:
        """Time steps at which the given object has been observed."""
        return [r.t for r in self._history if r.object_id == object_id]

    # -- retained-set bookkeeping -------------------------------------------

    def _hypothesis_log_prod(self, c: tuple) -> np.ndarray:
        cols = np.asarray(c, dtype=int) - 1
        return self._log_psi[:, self._obj_idx, cols].sum(axis=1)

    def _append_hypothesis(self, c: tuple) -> None:
        if c in self._retained_idx:
            raise AlreadyRetained(f"{c} is already retained")
        if len(self._retained) >= self.config.n_retained:
            raise CapacityExceeded(
                f"retained set is at capacity {self.config.n_retained}"
            )
        base = self._hypothesis_log_prod(c)
        self._log_w = np.column_stack([self._log_w, base])
        self._log_phi = np.column_stack([self._log_phi, self.config.q2 * base])
        self._retained.append(c)
        self._retained_idx[c] = len(self._retained) - 1
        lp = self.prior.log_prior(c)
        self._log_priors.append(lp)
        power = math.exp(lp) ** self.config.q1
        self._prior_powers.append(power)
        self._s0_in += power

    def _remove_hypothesis(self, c: tuple) -> None:
        # O(1) in accumulator math: subtract the cached prior power, drop the
        # cached columns; nothing is recomputed.
        idx = self._retained_idx.pop(c)
        self._retained.pop(idx)
        self._log_priors.pop(idx)
        self._s0_in -= self._prior_powers.pop(idx)
        self._log_w = np.delete(self._log_w, idx, axis=1)
        self._log_phi = np.delete(self._log_phi, idx, axis=1)
        for key, pos in self._retained_idx.items():
            if pos > idx:
                self._retained_idx[key] = pos - 1

    def swap_hypothesis(
        self, add: Sequence[int], remove: Optional[Sequence[int]] = None
    ) -> None:
        """Add one assignment to the retained set, optionally removing another.

        Validation happens before any mutation, so a failed swap leaves the
        engine untouched.
        """
        add = validate_assignment(add, self.n_objects, self.n_classes)
        if add in self._retained_idx:
            raise AlreadyRetained(f"{add} is already retained")
        if remove is not None:
            remove = validate_assignment(remove, self.n_objects, self.n_classes)
            if remove not in self._retained_idx:
                raise NotRetained(f"{remove} is not retained")
        new_size = len(self._retained) + 1 - (remove is not None)
        if new_size > self.config.n_retained:
            raise CapacityExceeded(
                f"swap would hold {new_size} > {self.config.n_retained} hypotheses"
            )
        if remove is not None:
            self._remove_hypothesis(remove)
        self._append_hypothesis(add)

    def prune_to_top_k(self, k: int) -> None:
        """Keep the k retained hypotheses with the largest sample-averaged
        unnormalized weight; ties broken by lexicographic assignment order."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if k >= len(self._retained):
            return
        scores = self._log_retained_weights()
        ranked = sorted(
            range(len(self._retained)),
            key=lambda i: (-scores[i], self._retained[i]),
        )
        drop = [self._retained[i] for i in ranked[k:]]
        for c in drop:
            self._remove_hypothesis(c)

    # -- observation ingestion ----------------------------------------------

    def ingest_observations(
        self,
        t: int,
        obs: Sequence[tuple[int, SemanticObservation]],
        samples,
    ) -> None:
        """Fold one time step of semantic observations into all accumulators.

        obs is a list of (object_id, observation) pairs with known data
        association. Under the refresh policy the whole observation history
        is re-evaluated at the provided samples first; under the frozen
        policy only the new factors are evaluated, which is what keeps the
        per-step cost at O(n_obs * max(M, n_retained)) per sample.
        """
        if not obs:
            return
        n, m = self.n_objects, self.n_classes
        seen: set[int] = set()
        for oid, z in obs:
            if not 0 <= int(oid) < n:
                raise UnknownObject(f"object id {oid} outside [0, {n})")
            if int(oid) in seen:
                raise DuplicateObservation(f"object {oid} observed twice at step {t}")
            seen.add(int(oid))
            if len(z) != m:
                raise ValueError(f"observation has {len(z)} classes, model has {m}")
        if len(samples) != self.config.n_samples:
            raise ValueError(
                f"got {len(samples)} samples, engine runs on {self.config.n_samples}"
            )
        refresh = self.config.sample_policy == "refresh" and bool(self._history)
        needed = int(t) + 1
        if refresh:
            needed = max(needed, max(r.t for r in self._history) + 1)
        robot_all, object_all = _sample_arrays(samples, n, min_len=needed)

        if refresh:
            self._log_psi.fill(0.0)
            for rec in self._history:
                rec.robot_states = robot_all[:, rec.t, :].copy()
                rec.object_states = object_all[:, rec.object_id, :].copy()
                self._log_psi[:, rec.object_id, :] += log_likelihood_all_classes(
                    rec.z, rec.robot_states, rec.object_states, self.semantic_params
                )

        new_factors: list[tuple[int, np.ndarray]] = []
        for oid, z in obs:
            oid = int(oid)
            rec = ObservationRecord(
                t=int(t),
                object_id=oid,
                z=z,
                robot_states=robot_all[:, t, :].copy(),
                object_states=object_all[:, oid, :].copy(),
            )
            factor = log_likelihood_all_classes(
                z, rec.robot_states, rec.object_states, self.semantic_params
            )
            self._log_psi[:, oid, :] += factor
            self._history.append(rec)
            new_factors.append((oid, factor))

        q2 = self.config.q2
        if refresh:
            # everything moved: rebuild each per-object and per-hypothesis sum
            self._log_s = logsumexp(q2 * self._log_psi, axis=2)
            for j, c in enumerate(self._retained):
                base = self._hypothesis_log_prod(c)
                self._log_w[:, j] = base
                self._log_phi[:, j] = q2 * base
        else:
            # only the observed objects changed
            for oid, factor in new_factors:
                self._log_s[:, oid] = logsumexp(q2 * self._log_psi[:, oid, :], axis=1)
            if self._retained:
                for oid, factor in new_factors:
                    cols = np.array([c[oid] - 1 for c in self._retained])
                    delta = factor[:, cols]
                    self._log_w += delta
                    self._log_phi += q2 * delta
        self.last_time = max(self.last_time, int(t))

    # -- normalizers, bounds, queries ----------------------------------------

    def _log_retained_weights(self) -> np.ndarray:
        """Per retained hypothesis: log of the sample-averaged unnormalized
        weight, log((1/S) sum_s P0(C) prod_n psi)."""
        if not self._retained:
            return np.empty(0)
        return logmeanexp(self._log_w, axis=0) + np.asarray(self._log_priors)

    def log_retained_mass(self) -> float:
        """log sum over the retained set of sample-averaged weights."""
        if not self._retained:
            return -np.inf
        return float(logsumexp(self._log_retained_weights()))

    def exact_log_normalizer_independent(self) -> float:
        """Exact log normalizer for an independent prior.

        Swapping the sum over assignments with the product over objects turns
        sum_C P0(C) prod_n psi(n, c_n) into prod_n sum_c P0(c) psi(n, c),
        which is O(N * M) per sample instead of O(M^N). The geometric-only
        normalization constant is common to every hypothesis and cancels in
        posterior queries, so it is not included.
        """
        if self.prior.kind != "independent":
            raise WrongPriorKind("exact normalizer requires an independent prior")
        per_object = logsumexp(
            self._log_psi + self.prior.log_marginals[None, :, :], axis=2
        )  # (S, N)
        return float(logmeanexp(per_object.sum(axis=1)))

    def log_unnormalized_bound(self) -> float:
        """log of the Hoelder bound on the unnormalized mass of everything
        outside the retained set.

        (S0_all - S0_in)^(1/q1) * mean_s (Spsi_all - Spsi_in)^(1/q2), with the
        inner difference done by stable log-domain subtraction that floors the
        gap at the operands' rounding resolution and inflates the result, so
        rounding can only loosen the bound, never break it. The prior side
        re-sums the cached retained powers with fsum, so both operands are
        correctly rounded and a retained set holding every hypothesis yields
        a bound of exactly zero.
        """
        if len(self._retained) == self.n_classes**self.n_objects:
            return -np.inf  # nothing was pruned
        s0_diff = self._s0_all - math.fsum(self._prior_powers)
        if s0_diff <= 0.0:
            return -np.inf
        log_s_all = self._log_s.sum(axis=1)  # (S,) log Spsi_all per sample
        if self._retained:
            log_s_in = logsumexp(self._log_phi, axis=1)
        else:
            log_s_in = np.full(log_s_all.shape, -np.inf)
        log_diff = log_diff_exp(log_s_all, log_s_in)
        if np.all(np.isneginf(log_diff)):
            return -np.inf
        return math.log(s0_diff) / self.config.q1 + float(
            logmeanexp(log_diff / self.config.q2)
        )

    def unnormalized_bound(self) -> float:
        """Linear-domain Hoelder bound (may overflow to inf on long runs;
        the log-domain form is what the normalizer composition uses)."""
        return float(np.exp(self.log_unnormalized_bound()))

    def lower_bound_log_normalizer(self) -> float:
        """log of the guaranteed normalizer lower bound:
        -log(retained mass + bound on pruned mass).

        The denominator is inflated by a relative margin far above the
        accumulated rounding of the two mass terms, so the result stays a
        true lower bound even when nothing was pruned and the two sides are
        mathematically equal.
        """
        return -float(
            np.logaddexp(self.log_retained_mass(), self.log_unnormalized_bound())
            + CONSERVATIVE_INFLATION
        )

    def pruned_mass_upper_bound(self) -> float:
        """Upper bound on the posterior probability that the true assignment
        was pruned, clamped to [0, 1]."""
        total = self.log_retained_mass() + self.lower_bound_log_normalizer()
        return float(np.clip(1.0 - np.exp(total), 0.0, 1.0))

    def query_posterior(self, c: Sequence[int], mode: Optional[str] = None) -> float:
        """Posterior probability of a retained assignment under a mode.

        naive renormalizes over the retained set, exact_independent divides
        by the exact normalizer, bound multiplies by the normalizer lower
        bound (a guaranteed per-hypothesis lower bound), oracle enumerates.
        """
        mode = self.config.mode if mode is None else mode
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        c = validate_assignment(c, self.n_objects, self.n_classes)
        if c not in self._retained_idx:
            raise NotRetained(f"{c} is not retained")
        idx = self._retained_idx[c]
        log_weight = float(logmeanexp(self._log_w[:, idx])) + self._log_priors[idx]
        if mode == "naive":
            return float(np.exp(log_weight - self.log_retained_mass()))
        if mode == "exact_independent":
            return float(np.exp(log_weight - self.exact_log_normalizer_independent()))
        if mode == "bound":
            return float(np.exp(log_weight + self.lower_bound_log_normalizer()))
        return enumerate_hypotheses(self.prior, self._log_psi).posterior(c)

    # -- exponent changes ------------------------------------------------------

    def set_exponents(self, q1: float, q2: float) -> None:
        """Switch Hoelder exponents; rebuilds the q2-powered accumulators
        (cost O(n_samples * N * M))."""
        self.config = replace(self.config, q1=q1, q2=q2)
        self._log_phi = q2 * self._log_w
        self._log_s = logsumexp(q2 * self._log_psi, axis=2)
        self._s0_all = self.prior.power_sum_all(q1)
        self._prior_powers = [math.exp(lp) ** q1 for lp in self._log_priors]
        self._s0_in = math.fsum(self._prior_powers)

    # -- snapshots ---------------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Engine state as a JSON-ready dict; accumulators are derived state
        and are rebuilt on load, so only the defining fields are stored."""
        if isinstance(self.prior, IndependentPrior):
            prior_doc = {"kind": "independent", "marginals": self.prior.marginals.tolist()}
        else:
            prior_doc = {
                "kind": "dependent",
                "table": self.prior.table.tolist(),
                "n_objects": self.prior.n_objects,
                "n_classes": self.prior.n_classes,
            }
        return {
            "schema": 1,
            "config": {
                "q1": self.config.q1,
                "q2": self.config.q2,
                "n_retained": self.config.n_retained,
                "n_samples": self.config.n_samples,
                "mode": self.config.mode,
                "sample_policy": self.config.sample_policy,
            },
            "prior": prior_doc,
            "semantic_params": {
                "n_classes": self.semantic_params.n_classes,
                "sigma_s": self.semantic_params.sigma_s,
            },
            "retained": [list(c) for c in self._retained],
            "last_time": self.last_time,
            "log_psi": self._log_psi.tolist(),
            "history": [
                {
                    "t": rec.t,
                    "object_id": rec.object_id,
                    "probs": rec.z.probs.tolist(),
                    "robot_states": rec.robot_states.tolist(),
                    "object_states": rec.object_states.tolist(),
                }
                for rec in self._history
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "HypothesisEngine":
        if doc.get("schema") != 1:
            raise ValueError(f"unsupported snapshot schema {doc.get('schema')}")
        prior_doc = doc["prior"]
        if prior_doc["kind"] == "independent":
            prior: PriorModel = IndependentPrior(prior_doc["marginals"])
        else:
            prior = DependentPrior(
                prior_doc["table"], prior_doc["n_objects"], prior_doc["n_classes"]
            )
        params = SemanticModelParams(**doc["semantic_params"])
        config = EngineConfig(**doc["config"])
        engine = cls(prior, params, config, retained=())
        engine._log_psi = np.asarray(doc["log_psi"], dtype=float)
        engine._log_s = logsumexp(config.q2 * engine._log_psi, axis=2)
        engine._history = [
            ObservationRecord(
                t=int(rec["t"]),
                object_id=int(rec["object_id"]),
                z=SemanticObservation(rec["probs"]),
                robot_states=np.asarray(rec["robot_states"], dtype=float),
                object_states=np.asarray(rec["object_states"], dtype=float),
            )
            for rec in doc["history"]
        ]
        engine.last_time = int(doc["last_time"])
        for c in doc["retained"]:
            engine._append_hypothesis(
                validate_assignment(c, prior.n_objects, prior.n_classes)
            )
        return engine
