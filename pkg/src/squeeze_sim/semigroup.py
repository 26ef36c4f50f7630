"""Linear plate dynamics on the energy space X = L2 x H2o.

The generator acts on states (v, w) as (A w, v) with A = -(Delta^2 - Delta)
under the pinned conditions. It is skew-adjoint, so the group it generates
rotates each sine mode in the (v, sqrt(nu) w) plane and conserves the X-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .spectral import SpectralCoeffs


class PinnedOperator:
    """Diagonal representation of A and of the group it generates."""

    def __init__(self, grid):
        self.grid = grid
        self.nu = grid.nu
        self.omega = np.sqrt(grid.nu)
        self._omega_flat = np.ascontiguousarray(self.omega.ravel())

    def rotate(self, v, w, t):
        """Array-level group action on coefficient arrays."""
        if t == 0.0:
            return v.copy(), w.copy()
        vo, wo = kernels.rotate(
            np.ascontiguousarray(v.ravel(), dtype=float),
            np.ascontiguousarray(w.ravel(), dtype=float),
            self._omega_flat,
            float(t),
        )
        return vo.reshape(v.shape), wo.reshape(w.shape)

    def norm(self, v, w):
        g = self.grid
        return math.sqrt(g.weight * float(np.sum(v**2 + self.nu * w**2)))


@dataclass(frozen=True, eq=False)
class StateX:
    """A point (v, w) of the energy space, both parts as sine coefficients."""

    v: SpectralCoeffs
    w: SpectralCoeffs

    @property
    def grid(self):
        return self.w.grid

    def __add__(self, other):
        return StateX(self.v + other.v, self.w + other.w)

    def __sub__(self, other):
        return StateX(self.v - other.v, self.w - other.w)

    def __mul__(self, scalar):
        return StateX(self.v * scalar, self.w * scalar)

    __rmul__ = __mul__


def make_state(grid, v, w):
    return StateX(SpectralCoeffs(grid, v), SpectralCoeffs(grid, w))


def apply_Aop(op: PinnedOperator, w: SpectralCoeffs) -> SpectralCoeffs:
    """A w = -(Delta^2 - Delta) w."""
    return SpectralCoeffs(w.grid, -op.nu * w.coeffs)


def apply_generator(op: PinnedOperator, s: StateX) -> StateX:
    """Generator of the group: (v, w) -> (A w, v)."""
    return StateX(apply_Aop(op, s.w), s.v)


def semigroup_apply(op: PinnedOperator, s: StateX, t: float) -> StateX:
    v, w = op.rotate(s.v.coeffs, s.w.coeffs, t)
    return make_state(s.grid, v, w)


def inner_X(a: StateX, b: StateX) -> float:
    g = a.grid
    return g.weight * float(np.sum(a.v.coeffs * b.v.coeffs + g.nu * a.w.coeffs * b.w.coeffs))


def norm_X(s: StateX) -> float:
    return math.sqrt(max(inner_X(s, s), 0.0))


def generator_check(op: PinnedOperator, s: StateX, h: float) -> float:
    """X-norm of (T(h)s - s)/h minus the generator applied to s."""
    moved = semigroup_apply(op, s, h)
    return norm_X((moved - s) * (1.0 / h) - apply_generator(op, s))


def norm_domain(s: StateX) -> float:
    """Graph-type norm on D(generator): weights (1+nu) on v and (1+nu)^2 on w."""
    g = s.grid
    lam = 1.0 + g.nu
    nv = math.sqrt(g.weight * float(np.sum(lam * s.v.coeffs**2)))
    nw = math.sqrt(g.weight * float(np.sum(lam**2 * s.w.coeffs**2)))
    return nv + nw
