"""Kernel evaluations, lazy Gram sources, and the median heuristic."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmepricer.errors import DegenerateSample, DimensionMismatch, InvalidInput
from cmepricer.kernels import (
    KernelSpec,
    SampleMatrix,
    kernel_eval,
    kernel_cross,
    kernel_matrix_source,
    median_heuristic,
)
from cmepricer.lowrank import pivoted_cholesky

POLY = KernelSpec("polynomial", degree=4)
MATERN = KernelSpec("matern32", lengthscale=1.0)
GAUSS = KernelSpec("gaussian", lengthscale=0.7)

finite_floats = st.floats(min_value=-50, max_value=50, allow_nan=False)


def test_spec_validation():
    with pytest.raises(InvalidInput):
        KernelSpec("cubic")
    with pytest.raises(InvalidInput):
        KernelSpec("polynomial", degree=0)
    with pytest.raises(InvalidInput):
        KernelSpec("matern32", lengthscale=0.0)
    with pytest.raises(InvalidInput):
        KernelSpec("polynomial", offset=-0.5)


def test_polynomial_at_zero():
    assert kernel_eval(POLY, [0.0, 0.0], [0.0, 0.0]) == 1.0


def test_polynomial_self_value():
    x = np.array([1.5, -0.5])
    assert np.isclose(kernel_eval(POLY, x, x), (1.0 + x @ x) ** 4)


def test_matern_zero_distance():
    assert kernel_eval(MATERN, [3.0], [3.0]) == 1.0


def test_matern_unit_distance():
    expected = (1.0 + np.sqrt(3.0)) * np.exp(-np.sqrt(3.0))
    assert np.isclose(kernel_eval(MATERN, [0.0], [1.0]), expected)
    assert np.isclose(expected, 0.48335, atol=5e-6)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernel_eval(POLY, [1.0, 2.0], [1.0])


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(["polynomial", "matern32", "gaussian"]),
    a=st.tuples(finite_floats, finite_floats),
    b=st.tuples(finite_floats, finite_floats),
)
def test_symmetry(family, a, b):
    spec = KernelSpec(family, lengthscale=2.0)
    assert kernel_eval(spec, a, b) == pytest.approx(kernel_eval(spec, b, a), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("spec", [POLY, MATERN, GAUSS])
def test_gram_matrices_are_psd(spec):
    rng = np.random.default_rng(42)
    points = rng.standard_normal((20, 2))
    gram = kernel_cross(spec, points, points)
    assert np.allclose(gram, gram.T)
    trace = np.trace(gram)
    assert np.linalg.eigvalsh(gram).min() >= -1e-10 * trace


def test_matern_bounds():
    rng = np.random.default_rng(1)
    ys = rng.standard_normal(50)
    for a in ys[:10]:
        for b in ys[10:20]:
            value = kernel_eval(MATERN, [a], [b])
            assert 0.0 < value <= 1.0
            assert (value == 1.0) == (a == b)


def test_source_matches_pairwise_oracle():
    rng = np.random.default_rng(3)
    points = rng.standard_normal((10, 2))
    source = kernel_matrix_source(POLY, SampleMatrix(points))
    assert source.dim == 10
    for i in range(10):
        column = source.column(i)
        for j in range(10):
            assert np.isclose(column[j], kernel_eval(POLY, points[j], points[i]))
        assert np.isclose(source.diag(i), kernel_eval(POLY, points[i], points[i]))


def test_singleton_source():
    source = kernel_matrix_source(MATERN, SampleMatrix(np.array([2.0])))
    assert source.dim == 1
    assert source.diag(0) == 1.0


def test_duplicate_rows_rank_one():
    points = np.array([[1.0, 2.0], [1.0, 2.0]])
    source = kernel_matrix_source(POLY, SampleMatrix(points))
    factors = pivoted_cholesky(source, 1e-10)
    assert factors.rank == 1


def test_sample_matrix_validation():
    with pytest.raises(InvalidInput):
        SampleMatrix(np.array([np.nan, 1.0]))
    sample = SampleMatrix(np.arange(4.0))
    assert sample.dim == 1 and sample.n == 4


def test_median_heuristic_small_cases():
    assert median_heuristic([0.0, 1.0]) == 1.0
    assert median_heuristic([0.0, 1.0, 3.0]) == 2.0  # distances {1, 2, 3}


def test_median_heuristic_matches_brute_force():
    rng = np.random.default_rng(2024)
    values = rng.standard_normal(500)
    dists = sorted(
        abs(values[i] - values[j]) for i in range(len(values)) for j in range(i + 1, len(values))
    )
    expected = dists[(len(dists) - 1) // 2]
    assert median_heuristic(values) == pytest.approx(expected, rel=0, abs=0)


def test_median_heuristic_subsamples_deterministically():
    rng = np.random.default_rng(5)
    values = rng.standard_normal(3000)
    first = median_heuristic(values)
    second = median_heuristic(values)
    assert first == second
    assert first > 0


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(min_value=1e-3, max_value=1e3, allow_nan=False))
def test_median_heuristic_scale_equivariance(scale):
    values = np.array([0.0, 0.3, 1.1, 2.5, -0.7])
    assert median_heuristic(scale * values) == pytest.approx(scale * median_heuristic(values), rel=1e-12)


def test_median_heuristic_degenerate():
    with pytest.raises(DegenerateSample):
        median_heuristic([1.0, 1.0, 1.0])
    with pytest.raises(DegenerateSample):
        median_heuristic([2.0])
