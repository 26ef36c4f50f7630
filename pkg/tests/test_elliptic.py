import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squeeze_sim.elliptic import (
    C_o_bound,
    C_o_ratios,
    EllipticProblem,
    dv_S_o,
    dw_S_o,
    measure_C_o,
    measure_C_o_star,
    solve_S_o,
)
from squeeze_sim.errors import DomainViolationError
from squeeze_sim.spectral import (
    Grid1D,
    Grid2DRect,
    GridField,
    coeffs_to_nodal,
    norm_H1,
    norm_L2,
    poincare_constant,
    random_coeffs,
)
from squeeze_sim.verification import dense_elliptic_oracle


def _problem(grid, w, v, wb=None):
    return EllipticProblem(grid.from_function(w), grid.from_function(v), wb)


@pytest.mark.parametrize("c", [1.0, 2.0])
def test_constant_coefficient_manufactured_solution(c):
    errs = []
    for n in (64, 128, 256):
        g = Grid1D(1.0, n)
        sol = solve_S_o(_problem(g, lambda x: c + 0 * x, lambda x: np.sin(math.pi * x), c))
        exact = g.from_function(lambda x: -np.sin(math.pi * x) / (c**3 * math.pi**2))
        err = norm_L2(sol.u_tilde - exact)
        assert err <= 2 * g.h**2
        errs.append(err)
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 4.0) <= 0.5)


@pytest.mark.parametrize("k", [1, 2, 5])
@pytest.mark.parametrize("c", [0.7, 1.0, 2.0])
def test_single_mode_ratio(k, c):
    g = Grid1D(1.0, 63)
    sol = solve_S_o(_problem(g, lambda x: c + 0 * x, lambda x: np.sin(k * math.pi * x), c))
    mu = (k * math.pi) ** 2
    lam = 4 / g.h**2 * math.sin(k * math.pi * g.h / 2) ** 2  # discrete eigenvalue
    continuum = math.sqrt(1 + 1 / mu) / c**3
    assert sol.ratio_vs_bound == pytest.approx(continuum * mu / lam, rel=1e-10)
    assert sol.ratio_vs_bound == pytest.approx(continuum, rel=3 * (k * math.pi * g.h) ** 2)


def test_zero_source_gives_zero():
    g = Grid1D(1.0, 16)
    sol = solve_S_o(_problem(g, lambda x: 1 + 0.2 * np.sin(math.pi * x), lambda x: 0 * x, 1.0))
    assert np.all(sol.u_tilde.values == 0.0)
    assert sol.ratio_vs_bound == 0.0


@given(st.integers(0, 10_000))
def test_maximum_principle(seed):
    g = Grid1D(1.0, 24)
    rng = np.random.default_rng(seed)
    w = 0.5 + rng.uniform(size=24)
    v = -rng.uniform(size=24)
    u = solve_S_o(EllipticProblem(GridField(g, w), GridField(g, v), 1.0)).u_tilde.values
    assert np.all(u >= 0)


@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity_in_source(seed, a, b):
    g = Grid1D(1.0, 32)
    rng = np.random.default_rng(seed)
    w = GridField(g, 1 + coeffs_to_nodal(g, 0.2 * random_coeffs(g, rng)))
    v1 = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    v2 = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    lhs = solve_S_o(EllipticProblem(w, a * v1 + b * v2, 1.0)).u_tilde
    rhs = a * solve_S_o(EllipticProblem(w, v1, 1.0)).u_tilde + b * solve_S_o(EllipticProblem(w, v2, 1.0)).u_tilde
    assert norm_H1(lhs - rhs) <= 1e-12 * max(norm_H1(lhs), 1.0)


@pytest.mark.parametrize("bad", [0.0, -0.5, float("nan")])
def test_nonpositive_coefficient_rejected(bad):
    g = Grid1D(1.0, 8)
    w = np.ones(8)
    w[3] = bad
    with pytest.raises(DomainViolationError):
        solve_S_o(EllipticProblem(GridField(g, w), g.zeros(), 1.0))


def test_default_boundary_value_for_constant_field():
    g = Grid1D(1.0, 8)
    assert EllipticProblem(GridField(g, np.full(8, 1.5)), g.zeros()).w_boundary == 1.5


def test_dv_is_the_solve_and_difference_quotients_are_exact(rng):
    g = Grid1D(1.0, 32)
    w = GridField(g, 1 + coeffs_to_nodal(g, 0.3 * random_coeffs(g, rng)))
    v = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    phi = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    p = EllipticProblem(w, v, 1.0)
    d = dv_S_o(p, phi)
    for lam in (1e-2, 5e-3, 2.5e-3):
        up = solve_S_o(EllipticProblem(w, v + lam * phi, 1.0)).u_tilde
        um = solve_S_o(EllipticProblem(w, v - lam * phi, 1.0)).u_tilde
        assert norm_H1((up - um) * (0.5 / lam) - d) <= 1e-10 * norm_H1(d)


def test_dw_quotients_converge_at_second_order(rng):
    g = Grid1D(1.0, 64)
    w = GridField(g, 1 + coeffs_to_nodal(g, 0.3 * random_coeffs(g, rng)))
    v = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    psi = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    d = dw_S_o(EllipticProblem(w, v, 1.0), psi)
    errs = []
    for lam in (1e-2, 5e-3, 2.5e-3):
        up = solve_S_o(EllipticProblem(w + lam * psi, v, 1.0)).u_tilde
        um = solve_S_o(EllipticProblem(w - lam * psi, v, 1.0)).u_tilde
        errs.append(norm_H1((up - um) * (0.5 / lam) - d))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) <= 0.2)


def test_measured_C_o_below_analytic_and_monotone_in_trials():
    g = Grid1D(1.0, 48)
    bound = C_o_bound(1.0, poincare_constant(g))
    few = measure_C_o(g, 1.0, 10, seed=3)
    many = measure_C_o(g, 1.0, 40, seed=3)
    assert few <= many <= bound
    np.testing.assert_array_equal(C_o_ratios(g, 1.0, 10, seed=3), C_o_ratios(g, 1.0, 40, seed=3)[:10])


def test_measured_C_o_star_is_finite_and_positive():
    val = measure_C_o_star(Grid1D(1.0, 32), 1.0, 10, seed=1)
    assert 0 < val < math.inf


def test_dense_oracle_agreement_improves_fourfold():
    diffs = []
    for n in (31, 63, 127):
        g = Grid1D(1.0, n)
        p = _problem(g, lambda x: 1 + 0.3 * np.sin(math.pi * x), lambda x: np.sin(2 * math.pi * x), 1.0)
        diffs.append(norm_L2(solve_S_o(p).u_tilde - dense_elliptic_oracle(p)))
    ratios = np.array(diffs[:-1]) / np.array(diffs[1:])
    assert np.all(np.abs(ratios - 4.0) <= 0.8)


def test_rectangle_manufactured_solution():
    errs = []
    for n in (15, 31):
        g = Grid2DRect(1.0, 1.0, n, n)
        sol = solve_S_o(_problem(g, lambda x, y: 1 + 0 * x, lambda x, y: np.sin(math.pi * x) * np.sin(math.pi * y), 1.0))
        exact = g.from_function(lambda x, y: -np.sin(math.pi * x) * np.sin(math.pi * y) / (2 * math.pi**2))
        errs.append(norm_L2(sol.u_tilde - exact))
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)
