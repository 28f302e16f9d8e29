"""Prior models over the joint class assignment of all objects.

Two variants: an independent prior (product of per-object marginals) and a
dependent prior (explicit dense joint table). Both expose the q-power sums
the pruning bound needs; the independent variant computes its total power
sum by the same sum/product factorization that makes its normalizer cheap.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DuplicateHypothesis, InvalidClass, TensorTooLarge

# Guard on dense joint tables: anything larger than this is a config error,
# not something to silently allocate.
MAX_TABLE_SIZE = 10_000_000

ClassAssignment = tuple  # length-N tuple of int labels in [1, M]


def validate_assignment(c: Sequence[int], n_objects: int, n_classes: int) -> tuple:
    """Normalize a class assignment to a tuple of ints, checking ranges."""
    c = tuple(int(v) for v in c)
    if len(c) != n_objects:
        raise InvalidClass(f"assignment has length {len(c)}, expected {n_objects}")
    for v in c:
        if not 1 <= v <= n_classes:
            raise InvalidClass(f"class label {v} outside [1, {n_classes}]")
    return c


def _check_distinct(subset: Iterable[tuple]) -> list[tuple]:
    out = list(subset)
    if len(set(out)) != len(out):
        raise DuplicateHypothesis("subset contains repeated class assignments")
    return out


class PriorModel:
    """Common interface of the two prior variants."""

    kind: str
    n_objects: int
    n_classes: int

    def log_prior(self, c: Sequence[int]) -> float:
        raise NotImplementedError

    def power_sum_all(self, q1: float) -> float:
        raise NotImplementedError

    def power_sum_subset(self, subset: Iterable[Sequence[int]], q1: float) -> float:
        """Sum of prior^q1 over a distinct subset of assignments."""
        subset = _check_distinct(
            validate_assignment(c, self.n_objects, self.n_classes) for c in subset
        )
        return math.fsum(math.exp(self.log_prior(c)) ** q1 for c in subset)

    def all_assignments(self) -> Iterator[tuple]:
        """All M^N assignments in lexicographic order (object 0 most significant)."""
        return itertools.product(range(1, self.n_classes + 1), repeat=self.n_objects)


class IndependentPrior(PriorModel):
    """Prior that factorizes over objects: P(C) = prod_n marginal[n][c_n]."""

    kind = "independent"

    def __init__(self, marginals) -> None:
        m = np.asarray(marginals, dtype=float)
        if m.ndim != 2:
            raise ValueError("marginals must be a (n_objects, n_classes) table")
        if np.any(m <= 0.0):
            raise ValueError("marginal entries must be positive")
        sums = m.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("each marginal must sum to 1 within 1e-9")
        self.marginals = m
        self.n_objects = int(m.shape[0])
        self.n_classes = int(m.shape[1])
        self.log_marginals = np.log(m)
        self._power_sum_cache: dict[float, float] = {}

    def log_prior(self, c: Sequence[int]) -> float:
        c = validate_assignment(c, self.n_objects, self.n_classes)
        idx = np.asarray(c) - 1
        return float(self.log_marginals[np.arange(self.n_objects), idx].sum())

    def power_sum_all(self, q1: float) -> float:
        # sum_C prod_n p_n(c_n)^q1 factorizes into prod_n sum_c p_n(c)^q1
        key = float(q1)
        if key not in self._power_sum_cache:
            per_object = [math.fsum(float(p) ** q1 for p in row) for row in self.marginals]
            self._power_sum_cache[key] = math.prod(per_object)
        return self._power_sum_cache[key]


class DependentPrior(PriorModel):
    """Prior stored as a dense joint table over all M^N assignments.

    The table is flat, row-major, with object 0 the most significant digit:
    index(C) = sum_n (c_n - 1) * M^(N - 1 - n).
    """

    kind = "dependent"

    def __init__(self, table, n_objects: int, n_classes: int) -> None:
        size = n_classes**n_objects
        if size > MAX_TABLE_SIZE:
            raise TensorTooLarge(
                f"joint table with {n_classes}^{n_objects} entries exceeds "
                f"the {MAX_TABLE_SIZE} guard"
            )
        t = np.asarray(table, dtype=float).reshape(-1)
        if t.size != size:
            raise ValueError(f"table has {t.size} entries, expected {size}")
        if np.any(t <= 0.0):
            raise ValueError("table entries must be positive")
        if abs(math.fsum(t.tolist()) - 1.0) > 1e-9:
            raise ValueError("table must sum to 1 within 1e-9")
        self.table = t
        self.n_objects = int(n_objects)
        self.n_classes = int(n_classes)
        self._log_table = np.log(t)
        self._power_sum_cache: dict[float, float] = {}

    def flat_index(self, c: Sequence[int]) -> int:
        c = validate_assignment(c, self.n_objects, self.n_classes)
        idx = 0
        for v in c:
            idx = idx * self.n_classes + (v - 1)
        return idx

    def log_prior(self, c: Sequence[int]) -> float:
        return float(self._log_table[self.flat_index(c)])

    def power_sum_all(self, q1: float) -> float:
        key = float(q1)
        if key not in self._power_sum_cache:
            self._power_sum_cache[key] = math.fsum(float(p) ** q1 for p in self.table)
        return self._power_sum_cache[key]


def generate_random_prior(
    n_objects: int, n_classes: int, dependent: bool, seed: int
) -> PriorModel:
    """Random prior with entries drawn U[0.001, 1] and normalized by their sum.

    Independent variant applies the draw-and-normalize step to each marginal;
    dependent variant fills the whole joint table. Deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    if dependent:
        size = n_classes**n_objects
        if size > MAX_TABLE_SIZE:
            raise TensorTooLarge(
                f"dependent prior with {n_classes}^{n_objects} entries exceeds "
                f"the {MAX_TABLE_SIZE} guard"
            )
        raw = rng.uniform(0.001, 1.0, size=size)
        return DependentPrior(raw / raw.sum(), n_objects, n_classes)
    raw = rng.uniform(0.001, 1.0, size=(n_objects, n_classes))
    return IndependentPrior(raw / raw.sum(axis=1, keepdims=True))
