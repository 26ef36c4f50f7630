import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squeeze_sim.errors import ConfigurationError
from squeeze_sim.spectral import (
    Grid1D,
    Grid2DRect,
    GridField,
    SpectralCoeffs,
    dst_forward,
    dst_inverse,
    embedding_constant_estimate,
    laplace_eigenvalue,
    norm_H2,
    norm_H2o,
    norm_Hneg1,
    norm_L2,
    poincare_constant,
    random_coeffs,
    sup_ratio,
)


def test_grid_spacing_and_nodes():
    g = Grid1D(1.0, 3)
    assert g.h == 0.25
    np.testing.assert_allclose(g.x, [0.25, 0.5, 0.75])
    assert g.n_modes == 3


@pytest.mark.parametrize(
    "args",
    [(0.0, 4), (-1.0, 4), (float("inf"), 4), (1.0, 0), (1.0, 4, 5), (1.0, 2.5)],
)
def test_invalid_grids_rejected(args):
    with pytest.raises(ConfigurationError):
        Grid1D(*args)


def test_field_shape_mismatch_rejected():
    with pytest.raises(ConfigurationError):
        GridField(Grid1D(1.0, 4), np.zeros(5))


def test_naive_transform_oracle():
    # direct summation against the fast transform
    g = Grid1D(2.0, 9)
    f = np.random.default_rng(0).normal(size=9)
    S = np.sin(np.outer(g.x, np.arange(1, 10)) * math.pi / 2.0)
    c = np.linalg.solve(S, f)
    np.testing.assert_allclose(dst_forward(GridField(g, f)).coeffs, c, atol=1e-12)


@pytest.mark.parametrize("grid", [Grid1D(1.0, 16), Grid1D(3.0, 33), Grid2DRect(1.0, 2.0, 8, 11)])
def test_round_trip_is_identity(grid, rng):
    f = GridField(grid, rng.normal(size=grid.shape))
    np.testing.assert_allclose(dst_inverse(dst_forward(f)).values, f.values, atol=1e-12)


def test_single_mode_norms():
    g = Grid1D(1.0, 31)
    f = g.from_function(lambda x: np.sin(2 * math.pi * x))
    c = dst_forward(f).coeffs
    np.testing.assert_allclose(c, np.eye(31)[1], atol=1e-13)
    mu = (2 * math.pi) ** 2
    assert norm_L2(f) == pytest.approx(math.sqrt(0.5), rel=1e-13)
    assert norm_H2o(f) == pytest.approx(math.sqrt(0.5 * (mu + mu**2)), rel=1e-13)
    assert norm_Hneg1(f) == pytest.approx(math.sqrt(0.5 / mu), rel=1e-13)


def test_discrete_l2_is_parseval(rng):
    g = Grid1D(1.0, 40)
    f = rng.normal(size=40)
    assert norm_L2(GridField(g, f)) == pytest.approx(math.sqrt(g.h * np.sum(f**2)), rel=1e-12)


@pytest.mark.parametrize(
    "grid, k, expected",
    [
        (Grid1D(1.0, 8), 1, math.pi**2),
        (Grid1D(2.0, 8), 3, (3 * math.pi / 2) ** 2),
        (Grid2DRect(1.0, 2.0, 4, 4), (1, 1), math.pi**2 * 1.25),
    ],
)
def test_laplace_eigenvalue(grid, k, expected):
    assert laplace_eigenvalue(grid, k) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("k", [0, -1, (1, 1), 1.5])
def test_laplace_eigenvalue_rejects_bad_index(k):
    with pytest.raises(ConfigurationError):
        laplace_eigenvalue(Grid1D(1.0, 4), k)


def test_eigenvalues_match_grid_table():
    g = Grid2DRect(1.0, 2.0, 5, 6)
    assert g.mu[2, 3] == pytest.approx(laplace_eigenvalue(g, (3, 4)))


def test_poincare_constant():
    assert poincare_constant(Grid1D(1.0, 8)) == pytest.approx(1 / math.pi)


def test_sup_ratio_of_first_mode():
    # 1 / sqrt((1 + pi^2 + pi^4) / 2), evaluated independently with mpmath-free arithmetic
    expected = 0.13590752088729216
    g = Grid1D(1.0, 101)
    c = np.zeros(101)
    c[0] = 1.0
    assert sup_ratio(SpectralCoeffs(g, c)) == pytest.approx(expected, rel=1e-12)


def test_embedding_constant_dominates_probes_and_converges():
    g = Grid1D(1.0, 63)
    C = embedding_constant_estimate(g)
    rng = np.random.default_rng(7)
    for _ in range(200):
        assert sup_ratio(SpectralCoeffs(g, random_coeffs(g, rng, decay=rng.uniform(0, 4)))) <= C * (1 + 1e-12)
    C2 = embedding_constant_estimate(Grid1D(1.0, 127))
    assert abs(C2 - C) / C < 0.05


def test_embedding_constant_on_rectangle_is_finite():
    C = embedding_constant_estimate(Grid2DRect(1.0, 1.0, 15, 15))
    assert 0 < C < 1


@given(st.integers(1, 20), st.integers(0, 10_000))
def test_norm_truncation_is_monotone(K, seed):
    g_full = Grid1D(1.0, 20)
    f = np.random.default_rng(seed).normal(size=20)
    small = norm_H2o(GridField(Grid1D(1.0, 20, K), f))
    assert small <= norm_H2o(GridField(g_full, f)) * (1 + 1e-12)


def test_lifted_h2_norm_of_constant():
    g = Grid1D(2.0, 16)
    assert norm_H2(GridField(g, np.full(16, 3.0)), boundary_value=3.0) == pytest.approx(3.0 * math.sqrt(2.0))


def test_lifted_h2_norm_of_shifted_mode():
    # f = 1 + 0.2 sin(pi x): ||f||^2 = 1 + 0.8/pi + 0.02 (1 + pi^2 + pi^4)
    g = Grid1D(1.0, 255)
    f = g.from_function(lambda x: 1 + 0.2 * np.sin(math.pi * x))
    expected = math.sqrt(1 + 0.8 / math.pi + 0.02 * (1 + math.pi**2 + math.pi**4))
    assert norm_H2(f, boundary_value=1.0) == pytest.approx(expected, rel=1e-12)
