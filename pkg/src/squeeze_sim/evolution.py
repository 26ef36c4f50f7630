"""Mild-solution time stepping, Picard iteration, constants and the tangent system.

The lifted plate state s = (v~, w~) satisfies

    s(t) = T(t) s0 + int_0^t T(t - s) (F(s), 0) ds,
    F = G(w~) + beta_p * S_o(v~, w~ + theta_2),

where T is the rotation group of the pinned plate operator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import SimConfig
from .elliptic import FluxOperator, C_o_bound, C_o_star_bound, measure_C_o, measure_C_o_star
from .errors import ConfigurationError, IterationFailure, QuenchError
from .nonlinearity import G_values, PhysParams, inverse_power_constants
from .semigroup import PinnedOperator, StateX, make_state, norm_domain
from .spectral import (
    coeffs_to_nodal,
    embedding_constant_estimate,
    nodal_to_coeffs,
    norm_H2,
    norm_L2,
    poincare_constant,
    GridField,
)
from .trajectory import QuenchEvent, Trajectory, steps_for

log = logging.getLogger(__name__)

__all__ = [
    "ConstantsLedger",
    "PicardResult",
    "SimConfig",
    "TangentTrajectory",
    "Trajectory",
    "compute_constants",
    "delta_o",
    "duhamel_step",
    "evolve",
    "lipschitz_in_time_report",
    "picard_solve",
    "tangent_solve",
]


# -- source evaluation -------------------------------------------------------------


class Dynamics:
    """Evaluates the nonlinear source for coefficient arrays."""

    def __init__(self, grid, params: PhysParams, op: PinnedOperator | None = None):
        self.grid = grid
        self.params = params
        self.op = op or PinnedOperator(grid)

    def source(self, v, w, threshold=None):
        """Return (F coefficients, pressure u~ at nodes, min gap)."""
        p = self.params
        wn = coeffs_to_nodal(self.grid, w)
        g = G_values(p, wn, threshold)
        u = FluxOperator(self.grid, wn + p.theta_2, p.theta_2).solve(coeffs_to_nodal(self.grid, v))
        gap = min(float(np.min(wn)) + p.theta_2, p.theta_2)
        return nodal_to_coeffs(self.grid, g + p.beta_p * u), u, gap

    def min_gap(self, w):
        return min(float(np.min(coeffs_to_nodal(self.grid, w))) + self.params.theta_2, self.params.theta_2)


class _Rotation:
    """Precomputed rotation by a fixed time for all modes."""

    def __init__(self, op, t):
        self.c = np.cos(op.omega * t)
        self.s = np.sin(op.omega * t)
        self.omega = op.omega

    def __call__(self, v, w):
        return -self.omega * self.s * w + self.c * v, self.c * w + self.s / self.omega * v

    def source(self, f):
        """Rotation applied to (f, 0)."""
        return self.c * f, self.s / self.omega * f


def duhamel_step(op, params, s: StateX, t: float, dt: float, *, source=None, threshold=None) -> StateX:
    """One exponential-midpoint step of the variation-of-constants formula.

    ``source(v, w)`` may replace the model source; it must return the v-slot
    forcing as coefficients.
    """
    dyn = Dynamics(s.grid, params, op)
    src = source or (lambda v, w: dyn.source(v, w, threshold)[0])
    v, w = _midpoint(op, src, s.v.coeffs, s.w.coeffs, dt, src(s.v.coeffs, s.w.coeffs))
    return make_state(s.grid, v, w)


def _midpoint(op, src, v, w, dt, f0, full=None, half=None):
    full = full or _Rotation(op, dt)
    half = half or _Rotation(op, 0.5 * dt)
    hv, hw = half(v, w)
    fh = src(hv + 0.5 * dt * f0, hw)
    nv, nw = full(v, w)
    sv, sw = half.source(fh)
    return nv + dt * sv, nw + dt * sw


# -- constants ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantsLedger:
    """Constants of the local theory, evaluated for one configuration.

    Entries are analytic bounds assembled from measured inputs (``C_embed``,
    ``kappa``, norms of the initial data) unless ``provenance`` says otherwise.
    ``*_measured`` entries are ensemble maxima, i.e. lower bounds for the true
    constants; they are NaN until requested.
    """

    C_embed: float
    C_P: float
    kappa: float
    r: float
    M0: float
    C_tilde: float
    C1: float
    C2: float
    C3: float
    L_G: float
    C_o: float
    C_o_star: float
    L_G_star: float
    delta_o: float
    T0_terms: tuple
    T0: float
    C_theta: float
    C_alpha: float
    C_beta: float
    L_V: float
    w0_H2: float
    v0_L2: float
    G0_H2: float
    domain_norm: float
    C_o_measured: float = float("nan")
    C_o_star_measured: float = float("nan")
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["T0_terms"] = list(self.T0_terms)
        return d


_PROVENANCE = {
    "C_embed": "measured: exact discrete supremum at nodes, max with random probes",
    "C_P": "exact: 1/sqrt(mu_1)",
    "kappa": "measured: nodal minimum of the initial whole field",
    "r": "policy: kappa/(4 C_embed) unless set",
    "M0": "exact: unitary group",
    "delta_o": "measured: safe stepping plus bisection on the rotation",
    "T0": "discrete estimate: minimum of three terms",
    "C_o_measured": "lower bound: ensemble maximum",
    "C_o_star_measured": "lower bound: ensemble maximum",
}


def _inv(x):
    return math.inf if x == 0 else 1.0 / x


def delta_o(op, v0, w0, r, max_steps=20000):
    """Largest t with ||T(t') s0 - s0||_X <= r/2 for all t' in [0, t].

    The distance grows no faster than ||generator s0||_X, so stepping by the
    remaining gap over that rate never skips a crossing. Once close, the
    crossing is bracketed and refined by bisection.
    """
    target = 0.5 * r
    if 2.0 * op.norm(v0, w0) <= target:
        return math.inf
    lip = op.norm(-op.nu * w0, v0)

    def dist(t):
        v, w = op.rotate(v0, w0, t)
        return op.norm(v - v0, w - w0)

    lo, d = 0.0, 0.0
    for _ in range(max_steps):
        gap = target - d
        if gap <= 1e-6 * target:
            break
        d_try = dist(lo + gap / lip)
        if d_try > target:  # rounding at the boundary
            break
        lo, d = lo + gap / lip, d_try
    step = max(1e-6 * target / lip, 1e-12 * lo)
    hi = lo + step
    while dist(hi) <= target:
        lo, step = hi, 2.0 * step
        hi = lo + step
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dist(mid) <= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return lo


_EMBED_CACHE = {}


def _embedding(grid, seed):
    key = (grid, seed)
    if key not in _EMBED_CACHE:
        _EMBED_CACHE[key] = embedding_constant_estimate(grid, seed=seed)
    return _EMBED_CACHE[key]


def compute_constants(cfg: SimConfig, *, measure_trials=0, seed=None) -> ConstantsLedger:
    """Evaluate the constants ledger for the initial data of ``cfg``."""
    seed = cfg.seed if seed is None else seed
    grid, p = cfg.grid, cfg.params
    op = PinnedOperator(grid)
    c = _embedding(grid, seed)
    c_p = poincare_constant(grid)
    v0 = nodal_to_coeffs(grid, cfg.initial_v0.values)
    w0 = nodal_to_coeffs(grid, cfg.initial_w0_tilde.values)
    w0_nodal = coeffs_to_nodal(grid, w0)
    kappa = float(min(np.min(w0_nodal + p.theta_2), p.theta_2))
    if kappa <= 0:
        raise ConfigurationError(f"initial gap must be positive, got kappa={kappa:.6g}")
    r_max = kappa / (2.0 * c)
    if cfg.ball_radius is None:
        r = kappa / (4.0 * c)
    else:
        r = float(cfg.ball_radius)
        if not (0.0 < r < r_max):
            raise ConfigurationError(
                f"ball radius hypothesis violated: need 0 < r < kappa/(2 C_embed) = {r_max:.6g}, got r = {r:.6g}"
            )
    m0 = 1.0
    w0_h2 = norm_H2(GridField(grid, w0_nodal + p.theta_2), boundary_value=p.theta_2)
    c_tilde = r_max + w0_h2
    c1, c2, c3 = inverse_power_constants(c, kappa, w0_h2, domain_measure=grid.measure)
    l_g = p.beta_F * c2
    c_o = C_o_bound(kappa, c_p)
    c_o_star = C_o_star_bound(kappa, c, c_p, c_o, w0_h2)
    v0_l2 = norm_L2(GridField(grid, coeffs_to_nodal(grid, v0)))
    l_g_star = l_g + p.beta_p * c_o + p.beta_p * c_o_star * (v0_l2 + r_max)
    g0 = G_values(p, w0_nodal)
    g0_h2 = norm_H2(GridField(grid, g0), boundary_value=p.boundary_G)
    d_o = delta_o(op, v0, w0, r)
    term2 = _inv(2.0 * m0 * l_g_star)
    denom3 = (l_g + p.beta_p * c_o) * kappa + 2.0 * c * (g0_h2 + p.beta_p * c_o * v0_l2)
    term3 = kappa / (2.0 * m0) * _inv(denom3)
    t0 = min(d_o, term2, term3)
    c_theta = kappa * l_g / (2.0 * c) + g0_h2 + p.beta_p * c_o * (v0_l2 + r_max)
    c_alpha = c_o_star * (v0_l2 + r_max) + c_o
    c_beta = p.beta_p * c_alpha + m0 * l_g
    dnorm = norm_domain(make_state(grid, v0, w0))
    expo = 0.0 if l_g == 0 else m0 * l_g * t0
    l_v = m0 * (dnorm + c_theta) * math.exp(expo) if math.isfinite(expo) else math.inf
    measured = {}
    if measure_trials:
        center = (w0_nodal + p.theta_2, p.theta_2)
        measured["C_o_measured"] = measure_C_o(grid, kappa, measure_trials, w0=center, radius=r, seed=seed)
        measured["C_o_star_measured"] = measure_C_o_star(grid, kappa, measure_trials, w0=center, radius=r, seed=seed)
    return ConstantsLedger(
        C_embed=c, C_P=c_p, kappa=kappa, r=r, M0=m0, C_tilde=c_tilde, C1=c1, C2=c2, C3=c3,
        L_G=l_g, C_o=c_o, C_o_star=c_o_star, L_G_star=l_g_star, delta_o=d_o,
        T0_terms=(d_o, term2, term3), T0=t0, C_theta=c_theta, C_alpha=c_alpha, C_beta=c_beta,
        L_V=l_v, w0_H2=w0_h2, v0_L2=v0_l2, G0_H2=g0_h2, domain_norm=dnorm,
        provenance=dict(_PROVENANCE), **measured,
    )


# -- Picard iteration ------------------------------------------------------------------


@dataclass(eq=False)
class PicardResult:
    trajectory: Trajectory
    iterations: int
    ratios: list
    distances: list
    converged: bool


def _sup_dist(grid, av, aw, bv, bw):
    axes = tuple(range(1, av.ndim))
    return float(np.max(np.sqrt(grid.weight * np.sum((av - bv) ** 2 + grid.nu * (aw - bw) ** 2, axis=axes))))


def _duhamel_map(dyn, rot, dt, v0, w0, fs):
    """Trapezoidal Duhamel map on the time grid, given sources at the nodes."""
    n = len(fs)
    v = np.empty((n,) + v0.shape)
    w = np.empty((n,) + w0.shape)
    v[0], w[0] = v0, w0
    for i in range(n - 1):
        nv, nw = rot(v[i], w[i])
        sv, sw = rot.source(fs[i])
        v[i + 1] = nv + 0.5 * dt * (sv + fs[i + 1])
        w[i + 1] = nw + 0.5 * dt * sw
    return v, w


def picard_solve(cfg: SimConfig, T: float, *, start="constant", v0=None, w0=None, t0=0.0) -> PicardResult:
    """Fixed-point iteration of the Duhamel map on [t0, t0 + T].

    ``start`` selects the initial iterate: ``"constant"`` (s0 at all times) or
    ``"linear"`` (the free rotation of s0). Iteration stops once an iterate
    satisfies the fixed-point equation to ``cfg.picard_tol`` in sup-X norm.
    """
    grid = cfg.grid
    dyn = Dynamics(grid, cfg.params)
    if v0 is None:
        v0 = nodal_to_coeffs(grid, cfg.initial_v0.values)
        w0 = nodal_to_coeffs(grid, cfg.initial_w0_tilde.values)
    n = steps_for(T, cfg.dt)
    dt = T / n
    rot = _Rotation(dyn.op, dt)
    times = t0 + dt * np.arange(n + 1)
    if start == "constant":
        zv = np.broadcast_to(v0, (n + 1,) + v0.shape).copy()
        zw = np.broadcast_to(w0, (n + 1,) + w0.shape).copy()
    elif start == "linear":
        zv, zw = _duhamel_map(dyn, rot, dt, v0, w0, np.zeros((n + 1,) + v0.shape))
    else:
        raise ConfigurationError(f"unknown start {start!r}")
    scale = 1.0 + _sup_dist(grid, zv, zw, 0 * zv, 0 * zw)
    floor = 1e-13 * scale
    ratios, distances = [], []
    us = None
    for it in range(1, cfg.picard_max_iters + 2):
        evals = [dyn.source(zv[i], zw[i]) for i in range(n + 1)]
        fs = np.array([e[0] for e in evals])
        us = np.array([e[1] for e in evals])
        nv, nw = _duhamel_map(dyn, rot, dt, v0, w0, fs)
        d = _sup_dist(grid, nv, nw, zv, zw)
        if distances and distances[-1] > floor:
            ratios.append(d / distances[-1])
        distances.append(d)
        if d < cfg.picard_tol:
            # z satisfies the fixed-point equation; keep the refreshed iterate
            u_new = np.array([dyn.source(nv[i], nw[i])[1] for i in range(n + 1)])
            traj = Trajectory(grid, cfg.params, times, nv, nw, u_new, info={"method": "picard", "dt": dt})
            return PicardResult(traj, it - 1, ratios, distances, True)
        zv, zw = nv, nw
    raise IterationFailure(
        f"Picard iteration did not reach tol {cfg.picard_tol:g} in {cfg.picard_max_iters} iterations",
        last_ratio=ratios[-1] if ratios else float("nan"),
        iterations=cfg.picard_max_iters,
    )


# -- marching ----------------------------------------------------------------------------


def evolve(cfg: SimConfig) -> Trajectory:
    """Integrate over [0, horizon]; stops at the first quench.

    Uses exponential-midpoint marching, or restartable Picard windows when
    ``cfg.window`` is set. The quench threshold is anchored to the initial gap.
    """
    if cfg.window is not None:
        return _evolve_windows(cfg)
    grid, p = cfg.grid, cfg.params
    dyn = Dynamics(grid, p)
    threshold = cfg.quench_threshold()
    n = steps_for(cfg.horizon, cfg.dt)
    dt = cfg.horizon / n
    full, half = _Rotation(dyn.op, dt), _Rotation(dyn.op, 0.5 * dt)
    v = nodal_to_coeffs(grid, cfg.initial_v0.values)
    w = nodal_to_coeffs(grid, cfg.initial_w0_tilde.values)
    f, u, gap = dyn.source(v, w, threshold)
    times, vs, ws, us = [0.0], [v], [w], [u]
    quench = None

    def src(vv, ww):
        return dyn.source(vv, ww)[0]

    for i in range(n):
        t = i * dt
        try:
            nv, nw = _midpoint(dyn.op, src, v, w, dt, f, full, half)
            new_gap = dyn.min_gap(nw)
            if new_gap < threshold:
                frac = (gap - threshold) / (gap - new_gap) if gap > new_gap else 1.0
                loc = np.unravel_index(int(np.argmin(coeffs_to_nodal(grid, nw))), grid.shape)
                quench = QuenchEvent(t + frac * dt, tuple(int(j) for j in loc), new_gap, threshold)
                break
            f, u, gap = dyn.source(nv, nw)
        except QuenchError as exc:
            quench = QuenchEvent(t + 0.5 * dt, exc.location, exc.min_gap, threshold)
            break
        v, w = nv, nw
        if (i + 1) % cfg.store_every == 0 or i + 1 == n:
            times.append((i + 1) * dt)
            vs.append(v)
            ws.append(w)
            us.append(u)
    if quench is not None:
        log.warning("quench at t=%.6g (min gap %.6g)", quench.time, quench.min_gap)
    return Trajectory(
        grid, p, np.array(times), np.array(vs), np.array(ws), np.array(us), quench=quench,
        info={"method": "midpoint", "dt": dt, "store_every": cfg.store_every},
    )


def _evolve_windows(cfg: SimConfig, max_windows=100000) -> Trajectory:
    grid, p = cfg.grid, cfg.params
    dyn = Dynamics(grid, p)
    threshold = cfg.quench_threshold()
    v = nodal_to_coeffs(grid, cfg.initial_v0.values)
    w = nodal_to_coeffs(grid, cfg.initial_w0_tilde.values)
    t = 0.0
    times, vs, ws, us = [0.0], [v], [w], [dyn.source(v, w)[1]]
    segments = []
    quench = None
    while t < cfg.horizon * (1 - 1e-12):
        if len(segments) >= max_windows:
            raise ConfigurationError(f"window length too small to cover the horizon in {max_windows} windows")
        seg_cfg = cfg.with_(
            initial_v0=GridField(grid, coeffs_to_nodal(grid, v)),
            initial_w0_tilde=GridField(grid, coeffs_to_nodal(grid, w)),
            ball_radius=None,
        )
        ledger = compute_constants(seg_cfg)
        length = min(np.nextafter(ledger.T0, 0.0), cfg.window, cfg.horizon - t)
        res = picard_solve(seg_cfg, length, v0=v, w0=w, t0=t)
        tr = res.trajectory
        segments.append({"t0": t, "T": length, "T0": ledger.T0, "iterations": res.iterations})
        gaps = tr.min_gap
        below = np.nonzero(gaps < threshold)[0]
        if below.size:
            j = int(below[0])
            frac = (gaps[j - 1] - threshold) / (gaps[j - 1] - gaps[j])
            quench = QuenchEvent(float(tr.times[j - 1] + frac * (tr.times[j] - tr.times[j - 1])), None, float(gaps[j]), threshold)
            times.extend(tr.times[1:j])
            vs.extend(tr.v[1:j])
            ws.extend(tr.w[1:j])
            us.extend(tr.u_tilde[1:j])
            break
        times.extend(tr.times[1:])
        vs.extend(tr.v[1:])
        ws.extend(tr.w[1:])
        us.extend(tr.u_tilde[1:])
        v, w, t = tr.v[-1], tr.w[-1], float(tr.times[-1])
    return Trajectory(
        grid, p, np.array(times), np.array(vs), np.array(ws), np.array(us), quench=quench,
        info={"method": "picard-windows", "segments": segments},
    )


# -- tangent system --------------------------------------------------------------------------


@dataclass(eq=False)
class TangentTrajectory:
    """Time derivative (p~, q~) = (v~', w~') of a trajectory, as coefficients."""

    grid: object
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def state(self, i):
        return make_state(self.grid, self.p[i], self.q[i])


def tangent_solve(cfg: SimConfig, traj: Trajectory, *, tol=1e-13, max_iters=60) -> TangentTrajectory:
    """Solve the affine equation for (p~, q~) along ``traj``.

    The initial datum is (G(w~0), 0) + generator(s0). The source is
    G'(w~) q~ + beta_p (D_v S_o p~ + D_w S_o q~). Each step of the
    trapezoidal Duhamel rule is a fixed-point problem solved by Picard
    iteration, which is the windowed form of the global iteration.
    """
    grid, p = cfg.grid, cfg.params
    times = np.asarray(traj.times)
    if len(times) < 2:
        raise ConfigurationError("tangent solve needs at least two samples")
    dts = np.diff(times)
    dt = float(dts[0])
    if not np.allclose(dts, dt, rtol=1e-9, atol=0):
        raise ConfigurationError("tangent solve needs uniformly spaced samples")
    op = PinnedOperator(grid)
    rot = _Rotation(op, dt)

    ops, gaps3 = [], []
    for i in range(len(times)):
        wn = traj.w_nodal(i) + p.theta_2
        ops.append(FluxOperator(grid, wn, p.theta_2))
        gaps3.append(wn**3)

    def H(i, pc, qc):
        pn = coeffs_to_nodal(grid, pc)
        qn = coeffs_to_nodal(grid, qc)
        out = 2.0 * p.beta_F * qn / gaps3[i]
        if p.beta_p != 0.0:
            out = out + p.beta_p * ops[i].solve(pn - ops[i].apply_derivative(qn, traj.u_tilde[i]))
        return nodal_to_coeffs(grid, out)

    g0 = nodal_to_coeffs(grid, G_values(p, traj.w_nodal(0)))
    P = np.empty_like(traj.v)
    Q = np.empty_like(traj.w)
    P[0] = g0 - op.nu * traj.w[0]
    Q[0] = traj.v[0]
    h_prev = H(0, P[0], Q[0])
    for i in range(len(times) - 1):
        bv, bw = rot(P[i], Q[i])
        sv, sw = rot.source(h_prev)
        bv = bv + 0.5 * dt * sv
        bw = bw + 0.5 * dt * sw
        pv, qv = bv + 0.5 * dt * sv, bw + 0.5 * dt * sw  # explicit predictor
        for _ in range(max_iters):
            h_new = H(i + 1, pv, qv)
            nv = bv + 0.5 * dt * h_new
            change = op.norm(nv - pv, bw - qv)
            pv, qv = nv, bw
            if change <= tol * (1.0 + op.norm(pv, qv)):
                break
        else:
            raise IterationFailure("tangent step iteration did not converge", iterations=max_iters)
        P[i + 1], Q[i + 1] = pv, qv
        h_prev = H(i + 1, pv, qv)
    return TangentTrajectory(grid, times, P, Q)


# -- time regularity ------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzReport:
    max_ratio: float
    L_V: float
    pairs: int

    @property
    def ok(self):
        return self.max_ratio <= self.L_V


def lipschitz_in_time_report(traj: Trajectory, ledger: ConstantsLedger, max_all_pairs=512) -> LipschitzReport:
    """Largest ||s(t) - s(t')||_X / |t - t'| over sample pairs.

    All pairs are used for short trajectories, dyadic strides otherwise.
    """
    n = len(traj)
    if n < 2:
        return LipschitzReport(0.0, ledger.L_V, 0)
    strides = range(1, n) if n <= max_all_pairs else [2**k for k in range(int(math.log2(n - 1)) + 1)]
    best, pairs = 0.0, 0
    for m in strides:
        d = traj.diff_norms(np.roll(traj.v, -m, axis=0), np.roll(traj.w, -m, axis=0))[: n - m]
        dtm = traj.times[m:] - traj.times[: n - m]
        best = max(best, float(np.max(d / dtm)))
        pairs += n - m
    return LipschitzReport(best, ledger.L_V, pairs)
