"""Pressure solve div(w^3 grad u) = v with homogeneous Dirichlet data.

The operator is discretized in conservative flux form with face coefficients
equal to the mean of w^3 at the two adjacent nodes. In 1-D the tridiagonal
system goes to the compiled kernel; on a rectangle the 5-point system is
solved with a sparse direct factorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import kernels
from .errors import ConfigurationError, DomainViolationError
from .spectral import (
    GridField,
    SpectralCoeffs,
    coeffs_to_nodal,
    embedding_constant_estimate,
    norm_H1,
    norm_H2,
    norm_Hneg1,
    random_coeffs,
)


def _face_average(grid, values, boundary):
    """Per-axis face means of ``values`` padded with ``boundary``."""
    faces = []
    for axis in range(grid.ndim):
        pad = [(0, 0)] * grid.ndim
        pad[axis] = (1, 1)
        ext = np.pad(values, pad, constant_values=boundary)
        lo = [slice(None)] * grid.ndim
        hi = [slice(None)] * grid.ndim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        faces.append(0.5 * (ext[tuple(lo)] + ext[tuple(hi)]))
    return faces


def _apply_faces(grid, faces, u):
    out = np.zeros(grid.shape)
    for axis, (a, h) in enumerate(zip(faces, grid.spacing)):
        pad = [(0, 0)] * grid.ndim
        pad[axis] = (1, 1)
        flux = a * np.diff(np.pad(u, pad), axis=axis)
        out += np.diff(flux, axis=axis) / (h * h)
    return out


def _sparse_matrix(grid, faces):
    nx, ny = grid.shape
    hx, hy = grid.spacing
    ax, ay = faces
    idx = np.arange(nx * ny).reshape(nx, ny)
    rows, cols, vals = [], [], []
    diag = -(ax[:-1, :] + ax[1:, :]) / hx**2 - (ay[:, :-1] + ay[:, 1:]) / hy**2
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())
    for src, dst, coef in (
        (idx[1:, :], idx[:-1, :], ax[1:-1, :] / hx**2),
        (idx[:-1, :], idx[1:, :], ax[1:-1, :] / hx**2),
        (idx[:, 1:], idx[:, :-1], ay[:, 1:-1] / hy**2),
        (idx[:, :-1], idx[:, 1:], ay[:, 1:-1] / hy**2),
    ):
        rows.append(src.ravel())
        cols.append(dst.ravel())
        vals.append(coef.ravel())
    n = nx * ny
    return scipy.sparse.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


class FluxOperator:
    """Discrete div(w^3 grad .) for a fixed positive field w."""

    def __init__(self, grid, w, w_boundary):
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)) or np.min(w) <= 0.0 or w_boundary <= 0.0:
            raise DomainViolationError("elliptic coefficient requires w > 0 everywhere")
        self.grid = grid
        self.w = w
        self.w_boundary = float(w_boundary)
        if grid.ndim == 1:
            self.faces = [kernels.face_coefficients(np.ascontiguousarray(w), self.w_boundary, self.w_boundary)]
            self._lu = None
        else:
            self.faces = _face_average(grid, w**3, self.w_boundary**3)
            self._lu = scipy.sparse.linalg.splu(_sparse_matrix(grid, self.faces))

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self.grid.ndim == 1:
            return kernels.flux_solve(self.faces[0], np.ascontiguousarray(rhs), self.grid.spacing[0])
        u = self._lu.solve(rhs.ravel()).reshape(self.grid.shape)
        res = np.linalg.norm(_apply_faces(self.grid, self.faces, u) - rhs)
        if res > 1e-10 * max(1.0, np.linalg.norm(rhs)):
            raise ConfigurationError(f"sparse pressure solve residual {res:.3e} above tolerance")
        return u

    def apply(self, u):
        u = np.asarray(u, dtype=float)
        if self.grid.ndim == 1:
            return kernels.flux_apply(self.faces[0], np.ascontiguousarray(u), self.grid.spacing[0])
        return _apply_faces(self.grid, self.faces, u)

    def derivative_faces(self, psi):
        """Face coefficients of the w-derivative of w^3 in direction psi (psi = 0 on the boundary)."""
        return _face_average(self.grid, 3.0 * self.w**2 * np.asarray(psi, dtype=float), 0.0)

    def apply_derivative(self, psi, u):
        return _apply_faces(self.grid, self.derivative_faces(psi), u)

    def solve_w_derivative(self, psi, u):
        """eta solving div(w^3 grad eta) = -div(3 w^2 psi grad u)."""
        return self.solve(-self.apply_derivative(psi, u))


def _default_boundary(w):
    # constant extension of the boundary-adjacent nodes, averaged
    vals = np.asarray(w, dtype=float)
    edges = [np.take(vals, [0, -1], axis=a).ravel() for a in range(vals.ndim)]
    return float(np.mean(np.concatenate(edges)))


@dataclass(frozen=True, eq=False)
class EllipticProblem:
    """Coefficient field ``w`` (whole field, interior nodes) and source ``v``.

    ``w_boundary`` is the constant boundary value of w; when omitted, the mean
    of the boundary-adjacent nodal values is used.
    """

    w: GridField
    v: GridField
    w_boundary: float | None = None

    def __post_init__(self):
        if self.w.grid != self.v.grid:
            raise ConfigurationError("w and v live on different grids")
        if self.w_boundary is None:
            object.__setattr__(self, "w_boundary", _default_boundary(self.w.values))

    @property
    def grid(self):
        return self.w.grid

    def operator(self):
        return FluxOperator(self.grid, self.w.values, self.w_boundary)


@dataclass(frozen=True, eq=False)
class EllipticSolution:
    u_tilde: GridField
    h1_norm: float
    ratio_vs_bound: float


def solve_S_o(p: EllipticProblem) -> EllipticSolution:
    op = p.operator()
    u = GridField(p.grid, op.solve(p.v.values))
    h1 = norm_H1(u)
    denom = norm_Hneg1(p.v)
    return EllipticSolution(u, h1, h1 / denom if denom > 0 else 0.0)


def dv_S_o(p: EllipticProblem, phi: GridField) -> GridField:
    """Derivative in v: the solve is linear, so this is S_o(phi, w)."""
    return GridField(p.grid, p.operator().solve(phi.values))


def dw_S_o(p: EllipticProblem, psi: GridField) -> GridField:
    """Derivative in w along psi (psi vanishes on the boundary)."""
    op = p.operator()
    u = op.solve(p.v.values)
    return GridField(p.grid, op.solve_w_derivative(psi.values, u))


# -- constants ------------------------------------------------------------------


def C_o_bound(kappa, c_poincare):
    """Coercivity-based bound for ||S_o v||_H1 / ||v||_H-1 when w >= kappa/2."""
    return 16.0 * math.sqrt(c_poincare**2 + 1.0) / (kappa**3 * min(1.0, c_poincare**-2))


def C_o_star_bound(kappa, c_embed, c_poincare, c_o, w0_h2):
    """Bound for the Lipschitz dependence of S_o on w inside the ball."""
    return (
        24.0 * c_embed * c_o / kappa**3 * (w0_h2 + kappa / (2.0 * c_embed)) ** 2 * math.sqrt(c_poincare**2 + 1.0)
    )


def ball_sample(grid, rng, center, radius):
    """Random w_tilde with ||w_tilde - center||_H2 <= radius."""
    d = random_coeffs(grid, rng)
    nrm = math.sqrt(grid.weight * float(np.sum((1.0 + grid.nu) * d**2)))
    d *= radius * rng.uniform(0.0, 1.0) / nrm
    return center + coeffs_to_nodal(grid, d)


def _ensemble_setup(grid, kappa, w0, radius, seed):
    if w0 is None:
        w0 = np.full(grid.shape, float(kappa))
        wb = float(kappa)
    else:
        w0, wb = np.asarray(w0[0], dtype=float), float(w0[1])
    if radius is None:
        radius = kappa / (4.0 * embedding_constant_estimate(grid, seed=seed))
    return w0, wb, radius, np.random.default_rng(seed)


def C_o_ratios(grid, kappa, trials, *, w0=None, radius=None, seed=0):
    """Per-trial ratios ||S_o(v, w)||_H1 / ||v||_H-1 over random admissible (v, w).

    ``w0`` is an optional pair (nodal whole field, boundary value) centering the
    ball; by default the ball is centered at the constant ``kappa``.
    """
    w0, wb, radius, rng = _ensemble_setup(grid, kappa, w0, radius, seed)
    out = np.empty(trials)
    for i in range(trials):
        w = ball_sample(grid, rng, w0, radius)
        v = SpectralCoeffs(grid, random_coeffs(grid, rng))
        u = FluxOperator(grid, w, wb).solve(coeffs_to_nodal(grid, v.coeffs))
        out[i] = norm_H1(GridField(grid, u)) / norm_Hneg1(v)
    return out


def measure_C_o(grid, kappa, trials, *, w0=None, radius=None, seed=0):
    """Largest observed ratio; a lower bound for the true constant."""
    r = C_o_ratios(grid, kappa, trials, w0=w0, radius=radius, seed=seed)
    return float(np.max(r)) if len(r) else 0.0


def C_o_star_ratios(grid, kappa, trials, *, w0=None, radius=None, seed=0):
    """Per-trial ratios ||S_o(v,w1) - S_o(v,w2)||_H1 / (||v||_H-1 ||w1 - w2||_H2)."""
    w0, wb, radius, rng = _ensemble_setup(grid, kappa, w0, radius, seed)
    out = np.empty(trials)
    for i in range(trials):
        w1 = ball_sample(grid, rng, w0, radius)
        w2 = ball_sample(grid, rng, w0, radius)
        v = coeffs_to_nodal(grid, random_coeffs(grid, rng))
        du = FluxOperator(grid, w1, wb).solve(v) - FluxOperator(grid, w2, wb).solve(v)
        denom = norm_Hneg1(GridField(grid, v)) * norm_H2(GridField(grid, w1 - w2))
        out[i] = norm_H1(GridField(grid, du)) / denom if denom > 0 else 0.0
    return out


def measure_C_o_star(grid, kappa, trials, *, w0=None, radius=None, seed=0):
    r = C_o_star_ratios(grid, kappa, trials, w0=w0, radius=radius, seed=seed)
    return float(np.max(r)) if len(r) else 0.0
