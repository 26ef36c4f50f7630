"""Electrostatic and pressure-offset nonlinearity G and its derivative."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, QuenchError
from .spectral import GridField, norm_H2


@dataclass(frozen=True)
class PhysParams:
    """Coupling strengths and boundary values (theta_1 for u, theta_2 for w)."""

    beta_F: float
    beta_p: float
    theta_1: float
    theta_2: float

    def __post_init__(self):
        for name in ("beta_F", "beta_p", "theta_1", "theta_2"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise ConfigurationError(f"{name} must be finite, got {val!r}")
        if self.beta_F < 0 or self.beta_p < 0:
            raise ConfigurationError("beta_F and beta_p must be non-negative")
        if self.theta_2 <= 0:
            raise ConfigurationError("theta_2 must be positive")

    @property
    def boundary_G(self):
        """Value of G on the boundary, where w = theta_2."""
        return -self.beta_F / self.theta_2**2 + self.beta_p * (self.theta_1 - 1.0)


@dataclass(frozen=True)
class BallSpec:
    """Ball of radius ``r`` in H2 around ``w0_tilde``; ``kappa`` = min of w0."""

    w0_tilde: GridField
    r: float
    kappa: float


@dataclass(frozen=True)
class BallCheck:
    inside: bool
    lower_bound_ok: bool
    min_gap: float


def quench_threshold(kappa, margin=0.0, floor=1e-8):
    return max(0.5 * kappa * (1.0 - margin), floor)


def _gap(params, w_tilde_values):
    gap = np.asarray(w_tilde_values, dtype=float) + params.theta_2
    m = float(np.min(gap)) if gap.size else params.theta_2
    if not math.isfinite(m) or m <= 0.0:
        loc = np.unravel_index(int(np.argmin(gap)), gap.shape) if gap.size else None
        raise QuenchError(f"non-positive gap (min {m:.3e})", location=loc, min_gap=m)
    return gap, m


def G_values(params, w_tilde_values, threshold=None):
    """Array-level G; raises QuenchError when the gap drops below ``threshold``."""
    gap, m = _gap(params, w_tilde_values)
    if threshold is not None and m < threshold:
        loc = np.unravel_index(int(np.argmin(gap)), gap.shape)
        raise QuenchError(f"gap {m:.6g} below quench threshold {threshold:.6g}", location=loc, min_gap=m)
    return -params.beta_F / gap**2 + params.beta_p * (params.theta_1 - 1.0)


def Gprime_values(params, w_tilde_values, q_values):
    gap, _ = _gap(params, w_tilde_values)
    return 2.0 * params.beta_F * np.asarray(q_values, dtype=float) / gap**3


def eval_G(params: PhysParams, w_tilde: GridField, threshold=None) -> GridField:
    """G(w~) = -beta_F / (w~ + theta_2)^2 + beta_p (theta_1 - 1), nodewise.

    The result has boundary trace ``params.boundary_G``, not zero.
    """
    return GridField(w_tilde.grid, G_values(params, w_tilde.values, threshold))


def eval_Gprime(params: PhysParams, w_tilde: GridField, q: GridField) -> GridField:
    """G'(w~) q = 2 beta_F q / (w~ + theta_2)^3."""
    return GridField(w_tilde.grid, Gprime_values(params, w_tilde.values, q.values))


def ball_check(ball: BallSpec, w_tilde: GridField, theta_2: float) -> BallCheck:
    dist = norm_H2(w_tilde - ball.w0_tilde)
    min_gap = float(np.min(w_tilde.values + theta_2)) if w_tilde.values.size else theta_2
    min_gap = min(min_gap, theta_2)
    return BallCheck(dist <= ball.r, min_gap >= 0.5 * ball.kappa, min_gap)


def inverse_power_constants(c_embed, kappa, w0_h2, domain_measure=None):
    """C1, C2, C3 bounding H2 norms and Lipschitz moduli of w^-1, w^-2, w^-3 in the ball.

    ``w0_h2`` is the H2 norm of the whole initial field. The constant multiplying
    the L2 term of 1/w defaults to the embedding constant; pass
    ``domain_measure`` to use the domain area instead when it is larger.
    """
    c = c_embed
    c_dom = c if domain_measure is None else max(c, domain_measure)
    ct = kappa / (2.0 * c) + w0_h2
    c1_sq = (
        4.0 * c_dom / kappa**2
        + 16.0 / kappa**4 * ct**2
        + (4.0 / kappa**2 + 16.0 * c * ct / kappa**3) ** 2 * ct**2
    )
    c1 = math.sqrt(c1_sq)
    return c1, 2.0 * c1**3, 3.0 * c1**4
