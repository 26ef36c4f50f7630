import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from squeeze_sim.elliptic import ball_sample
from squeeze_sim.errors import ConfigurationError, QuenchError
from squeeze_sim.nonlinearity import (
    BallSpec,
    PhysParams,
    ball_check,
    eval_G,
    eval_Gprime,
    inverse_power_constants,
    quench_threshold,
)
from squeeze_sim.spectral import Grid1D, GridField, embedding_constant_estimate, random_coeffs, coeffs_to_nodal

P = PhysParams(0.1, 0.1, 1.0, 1.0)


def test_G_at_zero_deflection():
    g = Grid1D(1.0, 4)
    np.testing.assert_allclose(eval_G(P, g.zeros()).values, -0.1)


def test_equilibrium_parameters_give_zero_G():
    p = PhysParams(0.1 * (2.0 - 1.0) * 1.5**2, 0.1, 2.0, 1.5)
    np.testing.assert_allclose(eval_G(p, Grid1D(1.0, 4).zeros()).values, 0.0, atol=1e-16)
    assert p.boundary_G == pytest.approx(0.0, abs=1e-16)


@pytest.mark.parametrize("q", [1e-2, -3e-1])
def test_Gprime_closed_form(q):
    g = Grid1D(1.0, 3)
    out = eval_Gprime(P, GridField(g, [0.2, 0.0, -0.5]), GridField(g, [q, q, q]))
    np.testing.assert_allclose(out.values, 2 * 0.1 * q / np.array([1.2, 1.0, 0.5]) ** 3)


def test_Gprime_difference_quotients_second_order(rng):
    g = Grid1D(1.0, 32)
    w = GridField(g, coeffs_to_nodal(g, 0.3 * random_coeffs(g, rng)))
    q = GridField(g, coeffs_to_nodal(g, random_coeffs(g, rng)))
    d = eval_Gprime(P, w, q).values
    errs = []
    for lam in (1e-2, 5e-3, 2.5e-3):
        fd = (eval_G(P, w + lam * q).values - eval_G(P, w - lam * q).values) / (2 * lam)
        errs.append(np.max(np.abs(fd - d)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) <= 0.2)


@pytest.mark.parametrize("wt", [-1.0, -2.0])
def test_nonpositive_gap_quenches(wt):
    g = Grid1D(1.0, 3)
    with pytest.raises(QuenchError):
        eval_G(P, GridField(g, [0.0, wt, 0.0]))


def test_threshold_quench_and_defaults():
    g = Grid1D(1.0, 3)
    assert quench_threshold(1.0) == 0.5
    assert quench_threshold(1e-12) == 1e-8
    with pytest.raises(QuenchError) as exc:
        eval_G(P, GridField(g, [0.0, -0.6, 0.0]), threshold=0.5)
    assert exc.value.location == (1,)


@pytest.mark.parametrize("field", ["beta_F", "beta_p"])
def test_negative_coupling_rejected(field):
    kw = dict(beta_F=0.1, beta_p=0.1, theta_1=1.0, theta_2=1.0)
    kw[field] = -1.0
    with pytest.raises(ConfigurationError):
        PhysParams(**kw)


@given(st.integers(0, 100_000))
def test_ball_members_keep_half_the_gap(seed):
    g = Grid1D(1.0, 32)
    w0 = g.from_function(lambda x: 0.2 * np.sin(math.pi * x))
    kappa = 1.0
    r = kappa / (4 * embedding_constant_estimate(g))
    rng = np.random.default_rng(seed)
    w = ball_sample(g, rng, w0.values + 1.0, r) - 1.0
    chk = ball_check(BallSpec(w0, r, kappa), GridField(g, w), 1.0)
    assert chk.inside and chk.lower_bound_ok and chk.min_gap >= kappa / 2


def test_inverse_power_constants_relations():
    c1, c2, c3 = inverse_power_constants(0.137, 1.0, 1.85)
    assert c2 == pytest.approx(2 * c1**3)
    assert c3 == pytest.approx(3 * c1**4)
    # C1^2 = 4C/k^2 + 16 Ct^2/k^4 + (4/k^2 + 16 C Ct/k^3)^2 Ct^2 with Ct = k/(2C) + ||w0||
    ct = 1 / (2 * 0.137) + 1.85
    assert c1**2 == pytest.approx(4 * 0.137 + 16 * ct**2 + (4 + 16 * 0.137 * ct) ** 2 * ct**2)
