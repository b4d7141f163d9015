import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

import oracles
from repalign.exceptions import DegenerateNullError, NotSquareError, RowCountMismatchError
from repalign.matching import assignment_max, permutation_correlation, permutation_null


def random_codes(rng, n=50, d=16, k=3):
    z = np.zeros((n, d))
    for i in range(n):
        z[i, rng.choice(d, k, replace=False)] = rng.uniform(0.5, 1.5, k)
    return sp.csr_matrix(z)


class TestAssignment:
    def test_examples(self):
        perm, w = assignment_max([[2, 1], [1, 2]])
        assert perm.tolist() == [0, 1] and w == 4
        perm, w = assignment_max([[0, 5], [5, 0]])
        assert perm.tolist() == [1, 0] and w == 10
        perm, w = assignment_max(np.eye(5))
        assert w == 5

    def test_all_ties_gives_identity(self):
        perm, _ = assignment_max(np.ones((6, 6)))
        assert perm.tolist() == list(range(6))

    def test_lexicographic_tie_break(self):
        # both [1, 0, 2] and [2, 1, 0]-style optima; the smaller must win
        w = np.array([[0, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=float)
        perm, total = assignment_max(w)
        assert total == 2 and perm.tolist() == [1, 0, 2]

    def test_not_square(self):
        with pytest.raises(NotSquareError):
            assignment_max(np.ones((2, 3)))

    def test_empty(self):
        perm, w = assignment_max(np.zeros((0, 0)))
        assert perm.size == 0 and w == 0.0


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1), st.booleans())
def test_assignment_matches_enumeration(n, seed, integer):
    r = np.random.default_rng(seed)
    w = r.integers(0, 3, (n, n)).astype(float) if integer else r.normal(size=(n, n))
    perm, total = assignment_max(w)
    want_perm, want_total = oracles.best_permutation(w)
    assert total == want_total
    assert perm.tolist() == want_perm.tolist()


class TestCorrelation:
    def test_column_permuted_copy(self, rng):
        z1 = random_codes(rng)
        applied = rng.permutation(16)
        res = permutation_correlation(z1, z1[:, applied])
        assert res.correlation == pytest.approx(1.0, abs=1e-9)
        # column i of z1 lands at position argsort(applied)[i] of z2
        assert res.permutation.tolist() == np.argsort(applied).tolist()

    def test_disjoint_rows(self):
        z1 = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
        z2 = sp.csr_matrix(np.array([[0.0, 0.0], [0.0, 2.0]]))
        assert permutation_correlation(z1, z2).correlation == 0.0

    def test_brute_force_on_six_columns(self, rng):
        z1 = random_codes(rng).toarray()[:, :6]
        z2 = random_codes(rng).toarray()[:, :6]
        res = permutation_correlation(z1, z2)
        _, best = oracles.best_permutation(z1.T @ z2)
        want = best / (np.linalg.norm(z1) * np.linalg.norm(z2))
        assert res.correlation == pytest.approx(want, abs=1e-12)

    def test_pads_columns(self, rng):
        z1 = random_codes(rng, d=10)
        z2 = random_codes(rng, d=12)
        res = permutation_correlation(z1, z2)
        assert res.permutation.size == 12 and 0 <= res.correlation <= 1

    def test_row_mismatch(self, rng):
        with pytest.raises(RowCountMismatchError):
            permutation_correlation(random_codes(rng, n=5), random_codes(rng, n=6))

    def test_invariances(self, rng):
        z1, z2 = random_codes(rng), random_codes(rng)
        base = permutation_correlation(z1, z2).correlation
        rows = rng.permutation(50)
        assert permutation_correlation(z1[rows], z2[rows]).correlation == pytest.approx(base, abs=1e-12)
        assert permutation_correlation(z1[:, rng.permutation(16)], z2).correlation == pytest.approx(base, abs=1e-12)
        assert permutation_correlation(z1, z2[:, rng.permutation(16)]).correlation == pytest.approx(base, abs=1e-12)


class TestNull:
    def test_structured_pair_is_significant(self, rng):
        z1 = random_codes(rng, n=200)
        null = permutation_null(z1, z1[:, rng.permutation(16)], n_draws=30, seed=0)
        assert null.zscore > 10
        assert null.zscore == pytest.approx((null.observed - null.mean) / null.std)

    def test_deterministic(self, rng):
        z1, z2 = random_codes(rng), random_codes(rng)
        assert permutation_null(z1, z2, 10, 4).draws == permutation_null(z1, z2, 10, 4).draws

    def test_degenerate(self):
        z = sp.csr_matrix(np.ones((5, 2)))
        with pytest.raises(DegenerateNullError):
            permutation_null(z, z, 5, 0)

    def test_needs_two_draws(self, rng):
        z = random_codes(rng)
        with pytest.raises(ValueError):
            permutation_null(z, z, 1, 0)
