"""Class priors: random generation, log-probabilities, and the q-power sums,
each checked against direct enumeration."""

import itertools
import math

import numpy as np
import pytest

from hybrid_belief.errors import DuplicateHypothesis, InvalidClass, TensorTooLarge
from hybrid_belief.priors import (
    DependentPrior,
    IndependentPrior,
    generate_random_prior,
    validate_assignment,
)


class TestValidateAssignment:
    def test_normalizes_to_int_tuple(self):
        assert validate_assignment([1, 2.0, np.int64(3)], 3, 3) == (1, 2, 3)

    def test_wrong_length(self):
        with pytest.raises(InvalidClass):
            validate_assignment((1, 2), 3, 3)

    def test_label_out_of_range(self):
        with pytest.raises(InvalidClass):
            validate_assignment((1, 4), 2, 3)
        with pytest.raises(InvalidClass):
            validate_assignment((0, 1), 2, 3)


class TestGenerateRandomPrior:
    def test_dependent_5_objects_3_classes(self):
        prior = generate_random_prior(5, 3, dependent=True, seed=0)
        assert prior.table.size == 243
        assert math.fsum(prior.table.tolist()) == pytest.approx(1.0, abs=1e-12)
        assert np.all(prior.table > 0.0)

    def test_independent_marginals_normalized(self):
        for n, m in [(1, 2), (3, 4), (6, 5)]:
            prior = generate_random_prior(n, m, dependent=False, seed=n * 10 + m)
            assert prior.marginals.shape == (n, m)
            np.testing.assert_allclose(prior.marginals.sum(axis=1), 1.0, atol=1e-12)

    def test_min_entry_bound_from_raw_draw_range(self):
        # raw draws lie in [0.001, 1], so after dividing by the sum every
        # entry is at least 0.001 / size
        prior = generate_random_prior(4, 3, dependent=True, seed=1)
        assert prior.table.min() >= 0.001 / prior.table.size
        ind = generate_random_prior(4, 3, dependent=False, seed=2)
        assert ind.marginals.min() >= 0.001 / 3

    def test_deterministic_per_seed(self):
        a = generate_random_prior(3, 3, dependent=True, seed=7)
        b = generate_random_prior(3, 3, dependent=True, seed=7)
        np.testing.assert_array_equal(a.table, b.table)

    def test_table_size_guard(self):
        with pytest.raises(TensorTooLarge):
            generate_random_prior(30, 4, dependent=True, seed=0)


class TestLogPrior:
    def test_uniform_independent(self):
        n, m = 3, 4
        prior = IndependentPrior(np.full((n, m), 1.0 / m))
        for c in itertools.product(range(1, m + 1), repeat=n):
            assert prior.log_prior(c) == pytest.approx(-n * math.log(m), rel=1e-12)

    def test_dependent_normalization(self):
        prior = generate_random_prior(3, 3, dependent=True, seed=3)
        total = math.fsum(
            math.exp(prior.log_prior(c)) for c in prior.all_assignments()
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_outer_product_table_matches_independent(self):
        rng = np.random.default_rng(4)
        ind = generate_random_prior(3, 3, dependent=False, seed=5)
        table = np.einsum("i,j,k->ijk", *ind.marginals).reshape(-1)
        dep = DependentPrior(table, 3, 3)
        for _ in range(100):
            c = tuple(int(v) for v in rng.integers(1, 4, size=3))
            np.testing.assert_allclose(
                dep.log_prior(c), ind.log_prior(c), rtol=1e-12
            )

    def test_invalid_class(self):
        prior = generate_random_prior(2, 3, dependent=True, seed=6)
        with pytest.raises(InvalidClass):
            prior.log_prior((1, 5))


class TestPowerSumAll:
    def test_q1_one_is_total_mass(self):
        for dependent in (False, True):
            prior = generate_random_prior(3, 4, dependent=dependent, seed=8)
            assert prior.power_sum_all(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_closed_form(self):
        n, m = 4, 3
        prior = IndependentPrior(np.full((n, m), 1.0 / m))
        # M^N entries of M^(-2N) sum to M^(-N)
        assert prior.power_sum_all(2.0) == pytest.approx(m ** (-n), rel=1e-12)

    def test_dependent_matches_brute_force(self):
        prior = generate_random_prior(3, 4, dependent=True, seed=9)
        brute = math.fsum(float(p) ** 2.0 for p in prior.table)
        assert prior.power_sum_all(2.0) == pytest.approx(brute, rel=1e-13)

    def test_independent_product_identity_vs_enumeration(self):
        # product-of-marginal-sums against the exhaustive M^N sum
        rng = np.random.default_rng(10)
        for _ in range(20):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(2, 6))
            q1 = float(rng.uniform(1.0, 4.0))
            prior = generate_random_prior(n, m, dependent=False, seed=int(rng.integers(2**31)))
            brute = math.fsum(
                math.exp(prior.log_prior(c)) ** q1 for c in prior.all_assignments()
            )
            np.testing.assert_allclose(prior.power_sum_all(q1), brute, rtol=1e-12)


class TestPowerSumSubset:
    def test_empty_subset_is_zero(self):
        prior = generate_random_prior(3, 3, dependent=True, seed=11)
        assert prior.power_sum_subset([], 2.0) == 0.0

    def test_full_subset_equals_power_sum_all(self):
        prior = generate_random_prior(3, 3, dependent=True, seed=12)
        full = list(prior.all_assignments())
        for q1 in (1.0, 1.5, 2.0, 4.0):
            np.testing.assert_allclose(
                prior.power_sum_subset(full, q1), prior.power_sum_all(q1), rtol=1e-12
            )

    def test_random_subset_matches_brute_force(self):
        rng = np.random.default_rng(13)
        prior = generate_random_prior(4, 3, dependent=True, seed=14)
        pool = list(prior.all_assignments())
        for _ in range(20):
            idx = rng.choice(len(pool), size=8, replace=False)
            subset = [pool[i] for i in idx]
            brute = math.fsum(math.exp(prior.log_prior(c)) ** 2.0 for c in subset)
            np.testing.assert_allclose(
                prior.power_sum_subset(subset, 2.0), brute, rtol=1e-12
            )

    def test_subset_never_exceeds_total(self):
        rng = np.random.default_rng(15)
        for dependent in (False, True):
            prior = generate_random_prior(3, 3, dependent=dependent, seed=16)
            pool = list(prior.all_assignments())
            for _ in range(20):
                k = int(rng.integers(1, len(pool)))
                idx = rng.choice(len(pool), size=k, replace=False)
                subset = [pool[i] for i in idx]
                assert prior.power_sum_subset(subset, 2.0) <= prior.power_sum_all(2.0)

    def test_duplicate_rejected(self):
        prior = generate_random_prior(2, 3, dependent=True, seed=17)
        with pytest.raises(DuplicateHypothesis):
            prior.power_sum_subset([(1, 1), (1, 1)], 2.0)


class TestDependentPriorTable:
    def test_flat_index_is_row_major(self):
        prior = generate_random_prior(3, 4, dependent=True, seed=18)
        for i, c in enumerate(prior.all_assignments()):
            assert prior.flat_index(c) == i

    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            DependentPrior([0.5, 0.5, 0.1], 2, 2)  # wrong size
        with pytest.raises(ValueError):
            DependentPrior([0.5, 0.5, 0.0, 0.0], 2, 2)  # zero entries
        with pytest.raises(ValueError):
            DependentPrior([0.5, 0.5, 0.5, 0.5], 2, 2)  # not normalized

    def test_rejects_bad_marginals(self):
        with pytest.raises(ValueError):
            IndependentPrior([[0.5, 0.6], [0.5, 0.5]])
        with pytest.raises(ValueError):
            IndependentPrior([[1.0, 0.0], [0.5, 0.5]])
