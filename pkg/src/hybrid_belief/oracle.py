"""Brute-force reference: enumerate every joint class assignment.

This is the ground truth that every fast path is checked against. It is
deliberately written as a per-hypothesis loop — its cost is the point: the
normalizer here costs O(M^N * n_samples), the engine's fast paths do not.
Reductions accumulate exponents in sorted order so enumeration order cannot
affect results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TooManyHypotheses
from .numerics import sorted_logsumexp
from .priors import PriorModel

MAX_HYPOTHESES = 1_000_000


def _guard(n_objects: int, n_classes: int) -> int:
    total = n_classes**n_objects
    if total > MAX_HYPOTHESES:
        raise TooManyHypotheses(
            f"{n_classes}^{n_objects} hypotheses exceed the {MAX_HYPOTHESES} guard"
        )
    return total


def hypothesis_log_weights(
    prior: PriorModel, log_psi: np.ndarray
) -> tuple[list[tuple], np.ndarray]:
    """Per-hypothesis per-sample log unnormalized weights.

    log_psi is the engine's (n_samples, n_objects, n_classes) table. Returns
    the assignments in lexicographic order and an (M^N, n_samples) array of
    log P0(C) + sum_n log_psi[s, n, c_n]. This is the state a naive full
    enumeration would maintain; building it is setup, not the measured cost.
    """
    log_psi = np.asarray(log_psi, dtype=float)
    n_samples, n_objects, n_classes = log_psi.shape
    if (n_objects, n_classes) != (prior.n_objects, prior.n_classes):
        raise ValueError("log_psi shape does not match the prior")
    total = _guard(n_objects, n_classes)
    obj_idx = np.arange(n_objects)
    assignments: list[tuple] = []
    log_w = np.empty((total, n_samples))
    for i, c in enumerate(prior.all_assignments()):
        cols = np.asarray(c, dtype=int) - 1
        log_w[i] = prior.log_prior(c) + log_psi[:, obj_idx, cols].sum(axis=1)
        assignments.append(c)
    return assignments, log_w


def mean_weight_log(per_sample: np.ndarray) -> float:
    """log of the sample average of exp(per_sample), sorted accumulation."""
    return sorted_logsumexp(per_sample) - math.log(per_sample.size)


def log_normalizer_from_weights(log_w: np.ndarray) -> float:
    """Normalizer of a full per-hypothesis weight table: log sum over
    hypotheses of the per-hypothesis sample averages.

    One pass per hypothesis over its samples — the O(M^N * n_samples)
    reduction whose cost the runtime benchmark measures.
    """
    log_w = np.asarray(log_w, dtype=float)
    per_hyp = np.empty(log_w.shape[0])
    for i in range(log_w.shape[0]):
        per_hyp[i] = mean_weight_log(log_w[i])
    return sorted_logsumexp(per_hyp)


@dataclass
class EnumerationResult:
    """Exact quantities for every hypothesis at fixed trajectory samples."""

    assignments: list[tuple]
    log_weights: np.ndarray  # (M^N,) log sample-averaged unnormalized weight
    log_normalizer: float
    posteriors: np.ndarray  # (M^N,) exact posterior probabilities
    _index: dict[tuple, int]

    def posterior(self, c) -> float:
        return float(self.posteriors[self._index[tuple(int(v) for v in c)]])

    def log_weight(self, c) -> float:
        return float(self.log_weights[self._index[tuple(int(v) for v in c)]])

    def log_subset_mass(self, subset) -> float:
        """log of the unnormalized mass carried by a set of assignments."""
        idx = [self._index[tuple(int(v) for v in c)] for c in subset]
        if not idx:
            return -np.inf
        return sorted_logsumexp(self.log_weights[idx])

    def log_complement_mass(self, subset) -> float:
        """log unnormalized mass of everything outside the given set."""
        keep = set(self._index[tuple(int(v) for v in c)] for c in subset)
        idx = [i for i in range(len(self.assignments)) if i not in keep]
        if not idx:
            return -np.inf
        return sorted_logsumexp(self.log_weights[idx])

    def pruned_mass(self, retained) -> float:
        """Exact posterior probability that the truth lies outside `retained`."""
        idx = [self._index[tuple(int(v) for v in c)] for c in retained]
        return float(np.clip(1.0 - self.posteriors[idx].sum(), 0.0, 1.0))


def enumerate_hypotheses(prior: PriorModel, log_psi: np.ndarray) -> EnumerationResult:
    """Full enumeration at fixed samples: exact weights, normalizer, posteriors."""
    assignments, log_w = hypothesis_log_weights(prior, log_psi)
    log_weights = np.empty(len(assignments))
    for i in range(len(assignments)):
        log_weights[i] = mean_weight_log(log_w[i])
    log_norm = sorted_logsumexp(log_weights)
    posteriors = np.exp(log_weights - log_norm)
    index = {c: i for i, c in enumerate(assignments)}
    return EnumerationResult(assignments, log_weights, log_norm, posteriors, index)
