import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

import oracles
from conftest import angles_to_points
from repalign.exceptions import (
    KTooLargeError,
    RankDeficientError,
    RowCountMismatchError,
    SampleTooLargeError,
    TooFewSamplesError,
)
from repalign.metrics import (
    AlignmentReport,
    MetricId,
    knn_edit_distance,
    knn_indices,
    levenshtein_rows,
    linear_cka,
    mutual_knn_overlap,
    subsampled_alignment,
    svcca,
    unbiased_cka,
)


def test_metric_id_parse_roundtrip():
    m = MetricId.parse("knn_overlap:10")
    assert (m.name, m.param) == ("knn_overlap", 10)
    assert str(m) == "knn_overlap:10"
    assert MetricId.parse("cka").param is None
    assert not MetricId.parse("knn_edit:5").larger_is_more_similar
    with pytest.raises(ValueError):
        MetricId.parse("svcca")
    with pytest.raises(ValueError):
        MetricId.parse("cka:3")
    with pytest.raises(ValueError):
        MetricId.parse("knn_overlap:0")


def test_alignment_report_population_std():
    r = AlignmentReport(MetricId("cka"), [1.0, 3.0], n_points=10)
    assert r.mean == 2.0 and r.std == 1.0


class TestLinearCka:
    def test_identical(self):
        f = np.eye(4)[:3]
        assert linear_cka(f, f) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_invariance(self, rng):
        f = rng.normal(size=(6, 3))
        q = ortho_group.rvs(3, random_state=1)
        assert linear_cka(f, f @ q) == pytest.approx(1.0, abs=1e-9)

    def test_matches_hsic_reference(self, rng):
        f, g = rng.normal(size=(20, 8)), rng.normal(size=(20, 8))
        assert linear_cka(f, g) == pytest.approx(oracles.cka_hsic(f, g), abs=1e-6)

    def test_row_mismatch(self, rng):
        with pytest.raises(RowCountMismatchError):
            linear_cka(rng.normal(size=(5, 2)), rng.normal(size=(6, 2)))


class TestUnbiasedCka:
    def test_self(self, rng):
        f = rng.normal(size=(10, 4))
        assert unbiased_cka(f, f) == pytest.approx(1.0, abs=1e-9)

    def test_matches_u_centering_reference(self, rng):
        f, g = rng.normal(size=(20, 8)), rng.normal(size=(20, 8))
        assert unbiased_cka(f, g) == pytest.approx(oracles.unbiased_cka(f, g), abs=1e-6)

    def test_too_few(self, rng):
        with pytest.raises(TooFewSamplesError):
            unbiased_cka(rng.normal(size=(3, 2)), rng.normal(size=(3, 2)))


class TestSvcca:
    def test_self(self, rng):
        f = rng.normal(size=(30, 5))
        assert svcca(f, f, 2) == pytest.approx(1.0, abs=1e-6)

    def test_column_permutation(self, rng):
        f = rng.normal(size=(30, 5))
        assert svcca(f, f[:, [3, 0, 4, 1, 2]], 5) == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal_projection_gives_zero(self):
        # f varies only along e1 and g only along e2, with uncorrelated patterns
        a = np.array([1.0, -1.0, 1.0, -1.0])
        b = np.array([1.0, 1.0, -1.0, -1.0])
        f = np.stack([a, np.zeros(4)], axis=1)
        g = np.stack([np.zeros(4), b], axis=1)
        assert svcca(f, g, 1) == pytest.approx(0.0, abs=1e-6)

    def test_matches_whitening_reference(self, rng):
        f, g = rng.normal(size=(20, 8)), rng.normal(size=(20, 8))
        assert svcca(f, g, 4) == pytest.approx(oracles.svcca(f, g, 4), abs=1e-6)

    def test_rank_deficient(self, rng):
        f = np.outer(rng.normal(size=10), rng.normal(size=3))
        with pytest.raises(RankDeficientError):
            svcca(f, rng.normal(size=(10, 3)), 2)


class TestKnn:
    def test_angles_k1(self):
        pts = angles_to_points([0, 10, 50, 60])
        idx = knn_indices(pts @ pts.T, 1)
        assert idx.tolist() == [[1], [0], [3], [2]]

    def test_tie_goes_to_lowest_index(self):
        pts = np.ones((4, 2))
        assert knn_indices(pts @ pts.T, 1).ravel().tolist() == [1, 0, 0, 0]

    def test_k_too_large(self):
        with pytest.raises(KTooLargeError):
            knn_indices(np.eye(3), 3)

    def test_overlap_examples(self):
        f = angles_to_points([0, 10, 50, 60])
        g = angles_to_points([0, 10, 20, 90])
        assert mutual_knn_overlap(f, f, 1) == 1.0
        assert mutual_knn_overlap(f, g, 1) == pytest.approx(0.75)

    def test_reversed_order_gives_zero(self):
        # on a line, nearest neighbor under f becomes farthest under g
        f = angles_to_points([0, 20, 45, 80])
        sim_f = f @ f.T
        g_sim = -sim_f
        np.fill_diagonal(g_sim, 1.0)
        a = knn_indices(sim_f, 1)
        b = knn_indices(g_sim, 1)
        assert np.mean(a == b) == 0.0

    def test_edit_examples(self):
        assert levenshtein_rows(np.array([[1, 2, 3]]), np.array([[1, 3, 2]]))[0] == 2
        assert levenshtein_rows(np.array([[1, 2]]), np.array([[3, 4]]))[0] == 2
        f = angles_to_points([0, 10, 50, 60, 120])
        assert knn_edit_distance(f, f, 3) == 0.0

    def test_oracle_agreement(self, rng):
        f, g = rng.normal(size=(20, 8)), rng.normal(size=(20, 8))
        assert mutual_knn_overlap(f, g, 5) == pytest.approx(oracles.knn_overlap(f, g, 5), abs=1e-12)
        assert knn_edit_distance(f, g, 5) == pytest.approx(oracles.knn_edit(f, g, 5), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_knn_invariant_under_monotone_similarity_map(seed, scale):
    x = np.random.default_rng(seed).normal(size=(12, 4))
    s = x @ x.T
    a = knn_indices(s, 3)
    assert np.array_equal(a, knn_indices(scale * s + 2.0, 3))
    assert np.array_equal(a, knn_indices(np.exp(s), 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.01, 100.0))
def test_cka_invariant_to_rotation_and_scale(seed, scale):
    r = np.random.default_rng(seed)
    f, g = r.normal(size=(15, 4)), r.normal(size=(15, 4))
    q = ortho_group.rvs(4, random_state=seed % 1000)
    base = linear_cka(f, g)
    assert linear_cka(scale * f @ q, g) == pytest.approx(base, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_levenshtein_matches_scalar_dp(seed):
    r = np.random.default_rng(seed)
    a = r.integers(0, 5, size=(6, 4))
    b = r.integers(0, 5, size=(6, 4))
    got = levenshtein_rows(a, b)
    want = [oracles.levenshtein(list(x), list(y)) for x, y in zip(a, b)]
    assert got.tolist() == want


class TestSubsampled:
    def test_full_sample_repeats(self, rng):
        f, g = rng.normal(size=(12, 3)), rng.normal(size=(12, 3))
        rep = subsampled_alignment(f, g, "cka", 12, 3, seed=0)
        assert len(set(rep.values)) == 1

    def test_self_alignment(self, rng):
        f = rng.normal(size=(40, 5))
        assert subsampled_alignment(f, f, "knn_overlap:5", 20, 4, seed=3).mean == 1.0

    def test_deterministic(self, rng):
        f, g = rng.normal(size=(40, 5)), rng.normal(size=(40, 5))
        a = subsampled_alignment(f, g, "knn_edit:4", 25, 5, seed=9)
        b = subsampled_alignment(f, g, "knn_edit:4", 25, 5, seed=9)
        assert a.to_dict() == b.to_dict()

    def test_sample_too_large(self, rng):
        f = rng.normal(size=(10, 3))
        with pytest.raises(SampleTooLargeError):
            subsampled_alignment(f, f, "cka", 11, 1, seed=0)
