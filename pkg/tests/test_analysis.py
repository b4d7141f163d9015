import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from repalign.analysis import (
    Debiaser,
    ModelSpec,
    RidgeDecomposition,
    build_spec_features,
    debias,
    ols_fit,
    reference_specs,
    ridge_fit,
    sliding_window_trend,
    window_starts,
)
from repalign.exceptions import (
    ConstantXError,
    SingularError,
    TooFewModelsError,
    WindowTooLargeError,
    ZeroRowError,
)


class TestDebias:
    def test_symmetric_rows_unchanged(self):
        f = np.array([[1.0, 2.0], [-1.0, -2.0], [2.0, -1.0], [-2.0, 1.0]])
        np.testing.assert_allclose(debias(f), f / np.linalg.norm(f, axis=1, keepdims=True))

    def test_antipodes(self):
        out = debias([[3.0, 1.0], [1.0, 3.0]])
        np.testing.assert_allclose(out[0], -out[1], atol=1e-15)

    def test_zero_row(self):
        with pytest.raises(ZeroRowError):
            debias([[1.0, 1.0], [1.0, 1.0], [2.0, 0.0], [0.0, 2.0]])

    def test_idempotent_when_centered_norms_agree(self, rng):
        # renormalizing keeps the mean at zero only if centered rows share a norm
        v = rng.normal(size=(15, 5))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        f = np.vstack([v, -v]) * 2.5 + rng.normal(size=5)
        once = debias(f)
        np.testing.assert_allclose(debias(once), once, atol=1e-6)

    def test_second_pass_shift_is_small(self, rng):
        f = rng.normal(size=(2000, 64)) + 3.0
        once = debias(f)
        assert np.abs(debias(once) - once).max() < 0.1

    def test_estimator(self, rng):
        f = rng.normal(size=(10, 3))
        est = Debiaser().fit(f)
        np.testing.assert_allclose(est.mean_, f.mean(axis=0))
        np.testing.assert_allclose(est.transform(f), debias(f))
        assert clone(est).get_params() == {}


class TestOls:
    def test_exact_line(self):
        r = ols_fit([0, 1, 2, 3], [1, 3, 5, 7])
        assert (r.slope, r.intercept, r.r_squared) == pytest.approx((2, 1, 1.0))

    def test_constant_y(self):
        r = ols_fit([0, 1, 2], [4, 4, 4])
        assert r.slope == 0 and r.r_squared == 0 and r.zero_variance

    def test_constant_x(self):
        with pytest.raises(ConstantXError):
            ols_fit([1, 1, 1], [1, 2, 3])

    def test_normal_equations_oracle(self, rng):
        x, y = rng.normal(size=10), rng.normal(size=10)
        a = np.stack([x, np.ones(10)], axis=1)
        slope, intercept = np.linalg.solve(a.T @ a, a.T @ y)
        r = ols_fit(x, y)
        resid = y - a @ [slope, intercept]
        r2 = 1 - resid @ resid / np.sum((y - y.mean()) ** 2)
        assert (r.slope, r.intercept, r.r_squared) == pytest.approx((slope, intercept, r2), abs=1e-9)


class TestWindows:
    def test_count(self):
        for n, w, s in [(5000, 500, 250), (1000, 300, 100), (501, 500, 250), (10, 3, 4)]:
            assert len(window_starts(n, w, s)) == (n - w) // s + 1

    def test_self_alignment_zero_variance(self, rng):
        f = rng.normal(size=(60, 4))
        freqs = rng.uniform(0.1, 1.0, 60)
        rep = sliding_window_trend(f, f, freqs, 20, 10, "knn_overlap:3")
        assert set(rep.alignments) == {1.0}
        assert rep.slope == 0 and rep.r_squared == 0 and rep.zero_variance

    def test_single_window(self, rng):
        f = rng.normal(size=(30, 4))
        rep = sliding_window_trend(f, f, np.ones(30), 30, 10, "cka")
        assert rep.single_window and rep.slope is None

    def test_window_too_large(self, rng):
        f = rng.normal(size=(10, 2))
        with pytest.raises(WindowTooLargeError):
            sliding_window_trend(f, f, np.ones(10), 11, 1)

    def test_sorted_internally(self, rng):
        f, g = rng.normal(size=(40, 4)), rng.normal(size=(40, 4))
        freqs = rng.uniform(0.1, 1.0, 40)
        perm = rng.permutation(40)
        a = sliding_window_trend(f, g, freqs, 20, 10, "cka")
        b = sliding_window_trend(f[perm], g[perm], freqs[perm], 20, 10, "cka")
        assert a.alignments == b.alignments
        assert np.all(np.diff(a.window_centers) > 0)


class TestSpecFeatures:
    def test_reference_table(self):
        feats = build_spec_features(reference_specs())
        assert feats.features.shape == (435, 15)
        np.testing.assert_allclose(feats.features.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(np.linalg.norm(feats.features, axis=0), 1, atol=1e-9)

    def test_onehot_exactly_one(self):
        feats = build_spec_features(reference_specs())
        assert np.all(feats.raw[:, 12:].sum(axis=1) == 1)

    def test_identical_specs(self):
        s = ModelSpec("a", 10**9, 12, 768, 10**12, 0, "llm", 2024)
        feats = build_spec_features([s, s])
        raw = feats.raw[0]
        assert np.all(raw[0:12:2] == raw[1:12:2])

    def test_too_few(self):
        with pytest.raises(TooFewModelsError):
            build_spec_features([ModelSpec("a", 1, 1, 1, 0, 0, "llm", 2020)])

    def test_modality_validation(self):
        with pytest.raises(ValueError):
            ModelSpec("a", 1, 1, 1, 0, 0, "audio", 2020)


class TestRidge:
    X = np.array([[1 / math.sqrt(2)], [-1 / math.sqrt(2)]])
    Y = np.array([1.0, -1.0])

    def test_hand_examples(self):
        assert ridge_fit(self.X, self.Y, 0.0)[0] == pytest.approx(math.sqrt(2), abs=1e-9)
        assert ridge_fit(self.X, self.Y, 1.0)[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
        assert abs(ridge_fit(self.X, self.Y, 1e9)[0]) < 1e-6

    def test_singular(self):
        with pytest.raises(SingularError):
            ridge_fit(np.ones((3, 2)), np.ones(3), 0.0)

    def test_optimality(self, rng):
        x, y = rng.normal(size=(20, 4)), rng.normal(size=20)
        lam = 0.7
        beta = ridge_fit(x, y, lam)

        def objective(b):
            r = y - x @ b
            return r @ r + lam * b @ b

        base = objective(beta)
        for i in range(4):
            for delta in (1e-4, -1e-4):
                b = beta.copy()
                b[i] += delta
                assert objective(b) >= base

    def test_estimator(self, rng):
        x = rng.normal(size=(30, 3))
        y = x @ [1.0, -2.0, 0.5] + 4.0
        est = RidgeDecomposition(alpha=1e-9).fit(x, y)
        np.testing.assert_allclose(est.coef_, [1.0, -2.0, 0.5], atol=1e-6)
        assert est.intercept_ == pytest.approx(4.0, abs=1e-6)
        assert est.score(x, y) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 10.0))
def test_ridge_matches_normal_equations(seed, lam):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=(12, 3)), r.normal(size=12)
    want = np.linalg.solve(x.T @ x + lam * np.eye(3), x.T @ y)
    np.testing.assert_allclose(ridge_fit(x, y, lam), want, atol=1e-9)
