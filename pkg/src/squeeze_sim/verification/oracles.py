"""Reference solvers that share no time-stepping code with the production path.

Only the spatial primitives (sine transforms, the pressure solve, G) are
reused. The module is kept free of imports from the evolution and
semigroup modules; a test enforces this.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import SimConfig
from ..elliptic import EllipticProblem, FluxOperator
from ..errors import ConfigurationError, OracleFailure, QuenchError
from ..nonlinearity import G_values
from ..spectral import GridField, coeffs_to_nodal, nodal_to_coeffs
from ..trajectory import QuenchEvent, Trajectory, steps_for


def rk4_reference(cfg: SimConfig, *, substeps=10, horizon=None, stability_limit=2.5) -> Trajectory:
    """Classical RK4 on the Galerkin system for the sine coefficients.

    w_k' = v_k,  v_k' = -nu_k w_k + <G + beta_p u~, phi_k>,

    with step ``cfg.dt / substeps``; samples are stored on the ``cfg.dt`` grid.
    Raises OracleFailure when the step cannot resolve the fastest mode.
    """
    grid, p = cfg.grid, cfg.params
    T = cfg.horizon if horizon is None else horizon
    n = steps_for(T, cfg.dt)
    dt = T / n
    h = dt / substeps
    nu = grid.nu
    if h * math.sqrt(float(np.max(nu))) > stability_limit:
        raise OracleFailure(
            f"RK4 step {h:.3g} cannot resolve frequency {math.sqrt(float(np.max(nu))):.3g}; reduce dt or modes"
        )
    threshold = cfg.quench_threshold()

    def pressure(v, w):
        wn = coeffs_to_nodal(grid, w) + p.theta_2
        return FluxOperator(grid, wn, p.theta_2).solve(coeffs_to_nodal(grid, v))

    def rhs(v, w):
        wn = coeffs_to_nodal(grid, w)
        force = G_values(p, wn) + p.beta_p * pressure(v, w)
        return -nu * w + nodal_to_coeffs(grid, force), v

    def gap(w):
        return min(float(np.min(coeffs_to_nodal(grid, w))) + p.theta_2, p.theta_2)

    v = nodal_to_coeffs(grid, cfg.initial_v0.values)
    w = nodal_to_coeffs(grid, cfg.initial_w0_tilde.values)
    times, vs, ws, us = [0.0], [v], [w], [pressure(v, w)]
    quench = None
    g_old = gap(w)
    for i in range(n):
        for j in range(substeps):
            t = i * dt + j * h
            try:
                k1v, k1w = rhs(v, w)
                k2v, k2w = rhs(v + 0.5 * h * k1v, w + 0.5 * h * k1w)
                k3v, k3w = rhs(v + 0.5 * h * k2v, w + 0.5 * h * k2w)
                k4v, k4w = rhs(v + h * k3v, w + h * k3w)
            except QuenchError as exc:
                quench = QuenchEvent(t + 0.5 * h, exc.location, exc.min_gap, threshold)
                break
            v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            w = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
            g_new = gap(w)
            if g_new < threshold:
                frac = (g_old - threshold) / (g_old - g_new) if g_old > g_new else 1.0
                quench = QuenchEvent(t + frac * h, None, g_new, threshold)
                break
            g_old = g_new
        if quench is not None:
            break
        if (i + 1) % cfg.store_every == 0 or i + 1 == n:
            times.append((i + 1) * dt)
            vs.append(v)
            ws.append(w)
            us.append(pressure(v, w))
    return Trajectory(
        grid, p, np.array(times), np.array(vs), np.array(ws), np.array(us), quench=quench,
        info={"method": "rk4", "dt": dt, "substeps": substeps},
    )


def dense_elliptic_oracle(p: EllipticProblem, refine=4) -> GridField:
    """Solve the same continuous problem on a grid ``refine`` times finer.

    v and w - w_boundary are interpolated by their sine series; the system is
    assembled as a dense matrix and solved directly. The result is restricted
    to the coarse nodes.
    """
    grid = p.grid
    if grid.ndim != 1:
        raise ConfigurationError("dense oracle is implemented for intervals only")
    n = grid.shape[0]
    L = grid.lengths[0]
    nf = refine * (n + 1) - 1
    hf = L / (nf + 1)
    xf = np.arange(1, nf + 1) * hf
    xc = np.arange(1, n + 1) * (L / (n + 1))
    k = np.arange(1, n + 1)
    coarse_basis = np.sin(np.outer(xc, k) * math.pi / L)
    fine_basis = np.sin(np.outer(xf, k) * math.pi / L)
    # the coarse sine matrix is orthogonal up to the factor (n + 1) / 2
    project = coarse_basis.T * (2.0 / (n + 1))
    wb = float(p.w_boundary)
    v_f = fine_basis @ (project @ p.v.values)
    w_f = fine_basis @ (project @ (p.w.values - wb)) + wb
    if np.min(w_f) <= 0:
        raise OracleFailure("interpolated coefficient is not positive")
    cubes = np.concatenate(([wb], w_f, [wb])) ** 3
    a = 0.5 * (cubes[:-1] + cubes[1:])
    A = np.diag(-(a[:-1] + a[1:])) + np.diag(a[1:-1], 1) + np.diag(a[1:-1], -1)
    u_f = np.linalg.solve(A / hf**2, v_f)
    return GridField(grid, u_f[refine - 1 :: refine])


def analytic_free_rotation(grid, v0, w0, t):
    """Closed-form solution of the linear plate for coefficient arrays."""
    om = np.sqrt(grid.nu)
    c, s = np.cos(om * t), np.sin(om * t)
    return -om * s * w0 + c * v0, c * w0 + s / om * v0
