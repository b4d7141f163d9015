import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from repalign.exceptions import EmptyListError, EmptyMatrixError, NonFiniteError, ZeroRowError
from repalign.numerics import (
    as_generator,
    as_matrix,
    column_mean,
    gram,
    percentile,
    svd,
    unit_normalize_rows,
)


def test_unit_normalize_examples():
    np.testing.assert_allclose(unit_normalize_rows([[3, 4]]), [[0.6, 0.8]])
    np.testing.assert_allclose(unit_normalize_rows([[1, 0], [0, 2]]), [[1, 0], [0, 1]])


def test_unit_normalize_zero_row_reports_index():
    with pytest.raises(ZeroRowError) as info:
        unit_normalize_rows([[1.0, 0.0], [1e-15, 1e-15]])
    assert info.value.index == 1


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(NonFiniteError):
        gram([[np.inf, 0.0]])


def test_column_mean_examples():
    np.testing.assert_array_equal(column_mean([[1, 3], [3, 5]]), [2, 4])
    np.testing.assert_array_equal(column_mean([[7, 7]]), [7, 7])
    np.testing.assert_array_equal(column_mean([[1], [-1]]), [0])
    with pytest.raises(EmptyMatrixError):
        column_mean(np.zeros((0, 3)))


def test_gram_examples():
    np.testing.assert_array_equal(gram(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(gram([[1, 0], [1, 0]]), np.ones((2, 2)))
    np.testing.assert_allclose(gram([[0.6, 0.8], [0.8, 0.6]]), [[1, 0.96], [0.96, 1]], atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 5)),
              elements=st.floats(-10, 10, allow_nan=False)))
def test_gram_symmetric(m):
    g = gram(m)
    assert np.array_equal(g, g.T)


def test_svd_examples(rng):
    _, s, _ = svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(s, [3, 1])
    u = rng.normal(size=4)
    v = rng.normal(size=3)
    _, s, _ = svd(np.outer(u, v))
    np.testing.assert_allclose(s[0], np.linalg.norm(u) * np.linalg.norm(v))
    assert abs(s[1]) < 1e-12
    m = rng.normal(size=(5, 3))
    U, S, V = svd(m)
    assert np.abs(U @ np.diag(S) @ V.T - m).max() <= 1e-8


def test_percentile_nearest_rank():
    vals = list(range(1, 101))
    assert percentile(vals, 5) == 5
    assert percentile(vals, 95) == 95
    assert percentile([42], 0) == 42
    assert percentile([42], 63.2) == 42
    assert percentile([3, 1, 2], 100) == 3
    with pytest.raises(EmptyListError):
        percentile([], 50)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), st.floats(0, 100))
def test_percentile_is_an_element_and_monotone(vals, p):
    v = percentile(vals, p)
    assert v in vals
    assert percentile(vals, min(p + 10, 100)) >= v


def test_generator_reproducible():
    a = as_generator(7).random(5)
    b = as_generator(7).random(5)
    assert np.array_equal(a, b)
    g = np.random.default_rng(1)
    assert as_generator(g) is g
