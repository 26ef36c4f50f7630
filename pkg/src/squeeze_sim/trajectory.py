"""Stored solution samples and per-sample diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .semigroup import make_state
from .spectral import coeffs_to_nodal, nodal_to_coeffs


@dataclass(frozen=True)
class QuenchEvent:
    time: float
    location: tuple | None
    min_gap: float
    threshold: float


@dataclass(eq=False)
class Trajectory:
    """Samples of (v~, w~) as sine coefficients plus the pressure u~ at nodes."""

    grid: object
    params: object
    times: np.ndarray
    v: np.ndarray
    w: np.ndarray
    u_tilde: np.ndarray
    quench: QuenchEvent | None = None
    ledger: object = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return make_state(self.grid, self.v[i], self.w[i])

    def w_nodal(self, i):
        return coeffs_to_nodal(self.grid, self.w[i])

    def v_nodal(self, i):
        return coeffs_to_nodal(self.grid, self.v[i])

    @property
    def min_gap(self):
        th = self.params.theta_2
        return np.array([min(float(np.min(self.w_nodal(i))) + th, th) for i in range(len(self))])

    @property
    def X_norm(self):
        g = self.grid
        axes = tuple(range(1, self.v.ndim))
        return np.sqrt(g.weight * np.sum(self.v**2 + g.nu * self.w**2, axis=axes))

    @property
    def ball_distance(self):
        """sqrt(||v~ - v~0||_L2^2 + ||w~ - w~0||_H2^2) for each sample."""
        g = self.grid
        axes = tuple(range(1, self.v.ndim))
        dv = self.v - self.v[0]
        dw = self.w - self.w[0]
        return np.sqrt(g.weight * np.sum(dv**2 + (1.0 + g.nu) * dw**2, axis=axes))

    def center_values(self):
        """(u, w) of the whole fields at the node nearest the center."""
        idx = self.grid.center_index()
        u = np.array([self.u_tilde[i][idx] for i in range(len(self))]) + self.params.theta_1
        w = np.array([self.w_nodal(i)[idx] for i in range(len(self))]) + self.params.theta_2
        return u, w

    def diff_norms(self, other_v, other_w):
        """Per-sample X-norm of the difference with another sample array."""
        g = self.grid
        axes = tuple(range(1, self.v.ndim))
        dv = self.v - other_v
        dw = self.w - other_w
        return np.sqrt(g.weight * np.sum(dv**2 + g.nu * dw**2, axis=axes))

    def sup_distance(self, other):
        n = min(len(self), len(other))
        if n == 0:
            return 0.0
        d = Trajectory(self.grid, self.params, self.times[:n], self.v[:n], self.w[:n], self.u_tilde[:n])
        return float(np.max(d.diff_norms(other.v[:n], other.w[:n])))


def project(grid, values):
    return nodal_to_coeffs(grid, values)


def steps_for(horizon, dt):
    """Number of uniform steps covering ``horizon`` with step at most ``dt``."""
    n = horizon / dt
    k = int(round(n))
    return k if math.isclose(n, k, rel_tol=1e-9, abs_tol=1e-9) else int(math.ceil(n))
