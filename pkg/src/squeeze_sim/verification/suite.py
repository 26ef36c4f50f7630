"""Randomized checks of the a-priori estimates against the constants ledger.

Each check produces one :class:`OracleReport`. Bound checks report the worst
ratio measured/bound, so their default tolerance is 1. Identity checks report
an absolute or relative error.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from importlib import resources

import numpy as np
import scipy.fft

from ..config import SimConfig
from ..elliptic import FluxOperator, ball_sample
from ..errors import ConfigurationError
from ..evolution import compute_constants, evolve, picard_solve, tangent_solve, lipschitz_in_time_report
from ..nonlinearity import G_values, Gprime_values
from ..semigroup import PinnedOperator
from ..spectral import (
    Grid1D,
    GridField,
    coeffs_to_nodal,
    nodal_to_coeffs,
    norm_H1,
    norm_H2,
    norm_Hneg1,
    random_coeffs,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleReport:
    name: str
    anchor: str
    max_error: float
    tolerance: float
    passed: bool
    samples: int
    notes: str = ""
    seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def load_tolerances(path=None):
    """Tolerance manifest: anchor name -> tolerance."""
    if path is None:
        text = resources.files("squeeze_sim").joinpath("data/tolerances.json").read_text(encoding="utf-8")
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read tolerance manifest {path!r}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError("tolerance manifest is not valid JSON") from exc
    return {k: float(v) for k, v in data.items()}


# -- operator-norm moduli along a trajectory ------------------------------------------------


def _dv_matrix(grid, w, wb):
    """Sine-coefficient matrix of D_v S_o at whole field w."""
    op = FluxOperator(grid, w, wb)
    basis = grid.basis_at_nodes[0]  # columns are nodal modes
    return np.column_stack([nodal_to_coeffs(grid, op.solve(basis[:, k])) for k in range(basis.shape[1])])


def _dw_matrix(grid, v, w, wb):
    op = FluxOperator(grid, w, wb)
    u = op.solve(v)
    basis = grid.basis_at_nodes[0]
    return np.column_stack(
        [nodal_to_coeffs(grid, op.solve_w_derivative(basis[:, k], u)) for k in range(basis.shape[1])]
    )


def _gprime_matrix(grid, params, w_tilde):
    basis = grid.basis_at_nodes[0]
    mult = 2.0 * params.beta_F / (w_tilde + params.theta_2) ** 3
    cols = scipy.fft.dst(mult[:, None] * basis, type=1, axis=0) / (grid.shape[0] + 1)
    return cols[: grid.mode_shape[0]]


def _op_norm(M, w_in, w_out):
    return float(np.linalg.norm(np.sqrt(w_out)[:, None] * M / np.sqrt(w_in)[None, :], 2))


def derivative_moduli(traj, strides=(32, 16, 8, 4, 2, 1), times=8, taus=(0.5, 1.0)):
    """alpha_1, alpha_2 and the G' modulus for each stride h = stride * dt.

    Returns a dict of arrays indexed like ``strides``. The supremum over t is
    taken over ``times`` evenly spaced samples, and over the listed tau values.
    """
    grid, p = traj.grid, traj.params
    if grid.ndim != 1:
        raise ConfigurationError("moduli are computed on intervals only")
    mu, nu = grid.mu, grid.nu
    wt = grid.weight
    h1, hneg, h2, h2o = wt * (1 + mu), wt / mu, wt * (1 + nu), wt * nu
    n = len(traj)
    out = {"alpha_1": [], "alpha_2": [], "gprime": []}
    th = p.theta_2
    for m in strides:
        if m >= n:
            raise ConfigurationError("trajectory too short for the requested strides")
        idx = np.unique(np.linspace(0, n - 1 - m, times).astype(int))
        a1 = a2 = gp = 0.0
        for i in idx:
            w_a, v_a = traj.w_nodal(i), traj.v_nodal(i)
            w_b, v_b = traj.w_nodal(i + m), traj.v_nodal(i + m)
            D1 = _dv_matrix(grid, w_a + th, th)
            D2 = _dw_matrix(grid, v_a, w_a + th, th)
            G1 = _gprime_matrix(grid, p, w_a)
            for tau in taus:
                wt_ = w_a + tau * (w_b - w_a)
                vt_ = v_a + tau * (v_b - v_a)
                a1 = max(a1, _op_norm(_dv_matrix(grid, wt_ + th, th) - D1, hneg, h1))
                a2 = max(a2, _op_norm(_dw_matrix(grid, vt_, wt_ + th, th) - D2, h2, h1))
                gp = max(gp, _op_norm(_gprime_matrix(grid, p, wt_) - G1, h2o, h2o))
        out["alpha_1"].append(a1)
        out["alpha_2"].append(a2)
        out["gprime"].append(gp)
    return {k: np.array(v) for k, v in out.items()}


def tangent_fd_errors(traj, tangent, t_index, strides=(40, 20, 10)):
    """X-norm errors of central differences of ``traj`` against ``tangent`` at one sample."""
    grid = traj.grid
    dt = float(traj.times[1] - traj.times[0])
    errs = []
    for m in strides:
        dv = (traj.v[t_index + m] - traj.v[t_index - m]) / (2 * m * dt)
        dw = (traj.w[t_index + m] - traj.w[t_index - m]) / (2 * m * dt)
        e = grid.weight * np.sum((dv - tangent.p[t_index]) ** 2 + grid.nu * (dw - tangent.q[t_index]) ** 2)
        errs.append(math.sqrt(float(e)))
    return np.array(errs)


def observed_orders(errors):
    errors = np.asarray(errors, dtype=float)
    return np.log2(errors[:-1] / errors[1:])


def coarse_config(cfg: SimConfig, n_interior=16, horizon=2e-3, dt=5e-6) -> SimConfig:
    """Same physics and initial data on a coarse interval grid.

    Short-time finite differences only see the asymptotic regime when the
    fastest retained mode is resolved, which needs few modes.
    """
    grid = cfg.grid
    if grid.ndim != 1:
        raise ConfigurationError("coarse configurations are built for intervals only")
    coarse = Grid1D(grid.length, min(n_interior, grid.n_interior))
    K = coarse.n_modes
    basis = coarse.basis_at_nodes[0]

    def resample(f):
        c = nodal_to_coeffs(grid, f.values)[:K]
        c = np.pad(c, (0, K - len(c)))
        return GridField(coarse, basis @ c)

    return SimConfig(
        params=cfg.params, grid=coarse, initial_v0=resample(cfg.initial_v0),
        initial_w0_tilde=resample(cfg.initial_w0_tilde), horizon=horizon, dt=dt, seed=cfg.seed,
    )


# -- suite ------------------------------------------------------------------------------------


class _Context:
    def __init__(self, cfg, seed):
        self.cfg = cfg
        self.seed = seed
        self.grid = cfg.grid
        self.p = cfg.params
        self.ledger = compute_constants(cfg, seed=seed)
        self.center = cfg.initial_w0_tilde.values + self.p.theta_2

    def rng(self, salt):
        return np.random.default_rng([self.seed, salt])

    def member(self, rng, radius=None):
        """Whole field of a random member of the ball."""
        return ball_sample(self.grid, rng, self.center, self.ledger.r if radius is None else radius)

    def h2(self, values):
        return norm_H2(GridField(self.grid, values))

    @cached_property
    def picard(self):
        T = 0.5 * self.ledger.T0 if math.isfinite(self.ledger.T0) else self.cfg.horizon
        cfg = self.cfg.with_(dt=T / 200, horizon=T)
        return picard_solve(cfg, T)

    @cached_property
    def coarse(self):
        return coarse_config(self.cfg)

    @cached_property
    def coarse_traj(self):
        return evolve(self.coarse)

    @cached_property
    def moduli(self):
        return derivative_moduli(self.coarse_traj)


def _ratio_report(name, anchor, ratios, tol, seed, notes=""):
    ratios = np.asarray(ratios, dtype=float)
    worst = float(np.max(ratios)) if ratios.size else 0.0
    return OracleReport(name, anchor, worst, tol, bool(worst <= tol), int(ratios.size), notes, seed)


def _check_ball(ctx, trials, tol):
    rng = ctx.rng(1)
    k = ctx.ledger.kappa
    ratios = [0.5 * k / min(float(np.min(ctx.member(rng))), ctx.p.theta_2) for _ in range(trials)]
    return _ratio_report("ball lower bound", "ball-lower-bound", ratios, tol, ctx.seed, "(kappa/2) / min gap")


def _inv_power(ctx, w, k):
    th = ctx.p.theta_2
    return norm_H2(GridField(ctx.grid, w**-k), boundary_value=th**-k)


def _check_inverse_powers(ctx, trials, tol):
    rng = ctx.rng(2)
    c1 = ctx.ledger.C1
    ratios = []
    for _ in range(trials):
        w = ctx.member(rng)
        ratios += [_inv_power(ctx, w, k) / c1**k for k in (1, 2, 3)]
    return _ratio_report("inverse powers H2 bound", "inverse-power-h2-bound", ratios, tol, ctx.seed)


def _check_inverse_lipschitz(ctx, trials, tol):
    rng = ctx.rng(3)
    L = ctx.ledger
    ratios = []
    for _ in range(trials):
        w1, w2 = ctx.member(rng), ctx.member(rng)
        d = ctx.h2(w1 - w2)
        for k, ck in ((2, L.C2), (3, L.C3)):
            ratios.append(ctx.h2(w1**-k - w2**-k) / (ck * d))
    return _ratio_report("inverse powers Lipschitz", "inverse-power-lipschitz", ratios, tol, ctx.seed)


def _G_diff(ctx, wt1, wt2):
    return ctx.h2(G_values(ctx.p, wt1) - G_values(ctx.p, wt2))


def _check_G_lipschitz(ctx, trials, tol):
    rng = ctx.rng(4)
    th, lg = ctx.p.theta_2, ctx.ledger.L_G
    if lg == 0:
        return OracleReport("G Lipschitz", "G-lipschitz", 0.0, tol, True, 0, "G constant", ctx.seed)
    ratios = []
    for _ in range(trials):
        w1, w2 = ctx.member(rng) - th, ctx.member(rng) - th
        ratios.append(_G_diff(ctx, w1, w2) / (lg * ctx.h2(w1 - w2)))
    return _ratio_report("G Lipschitz", "G-lipschitz", ratios, tol, ctx.seed)


def _check_G_ball(ctx, trials, tol):
    rng = ctx.rng(5)
    th, L = ctx.p.theta_2, ctx.ledger
    if L.L_G == 0:
        return OracleReport("G ball bound", "G-ball-bound", 0.0, tol, True, 0, "G constant", ctx.seed)
    w0 = ctx.center - th
    ratios = [_G_diff(ctx, ctx.member(rng) - th, w0) / (L.L_G * L.r) for _ in range(trials)]
    return _ratio_report("G ball bound", "G-ball-bound", ratios, tol, ctx.seed)


def _check_Gprime_bound(ctx, trials, tol):
    rng = ctx.rng(6)
    th, lg = ctx.p.theta_2, ctx.ledger.L_G
    if lg == 0:
        return OracleReport("G' bound", "G-prime-bound", 0.0, tol, True, 0, "G constant", ctx.seed)
    ratios = []
    for _ in range(trials):
        wt = ctx.member(rng) - th
        q = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        ratios.append(ctx.h2(Gprime_values(ctx.p, wt, q)) / (lg * ctx.h2(q)))
    return _ratio_report("G' bound", "G-prime-bound", ratios, tol, ctx.seed)


def _check_G_time(ctx, trials, tol):
    traj = ctx.picard.trajectory
    lg = ctx.ledger.L_G
    if lg == 0:
        return OracleReport("G time continuity", "G-time-holder", 0.0, tol, True, 0, "G constant", ctx.seed)
    n = len(traj)
    gs = [G_values(ctx.p, traj.w_nodal(i)) for i in range(n)]
    ws = [traj.w_nodal(i) for i in range(n)]
    num = den = 0.0
    for m in (1, 2, 4, 8, 16, 32, 64):
        for i in range(0, n - m):
            num = max(num, ctx.h2(gs[i + m] - gs[i]))
            den = max(den, ctx.h2(ws[i + m] - ws[i]))
    ratio = num / (lg * den) if den > 0 else 0.0
    return _ratio_report("G time continuity", "G-time-holder", [ratio], tol, ctx.seed, "sup over dyadic shifts")


def _moduli_report(name, anchor, values, tol, seed):
    values = np.asarray(values)
    monotone = bool(np.all(np.diff(values) <= 1e-15 + 1e-9 * values[:-1]))
    worst = float(values[-1]) if monotone else math.inf
    note = "smallest-h modulus; " + ("monotone" if monotone else "NOT monotone in h")
    return OracleReport(name, anchor, worst, tol, bool(worst <= tol), len(values), note, seed)


def _check_Gprime_continuity(ctx, trials, tol):
    mod = ctx.moduli
    return _moduli_report("G' uniform continuity", "G-prime-continuity", mod["gprime"], tol, ctx.seed)


def _check_alpha(ctx, trials, tol):
    mod = ctx.moduli
    both = np.maximum(mod["alpha_1"], mod["alpha_2"])
    return _moduli_report("pressure derivative moduli", "derivative-moduli", both, tol, ctx.seed)


def _elliptic_pairs(ctx, rng):
    w = ctx.member(rng)
    v = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
    return FluxOperator(ctx.grid, w, ctx.p.theta_2), w, v


def _check_elliptic_bound(ctx, trials, tol):
    rng = ctx.rng(7)
    ratios = []
    for _ in range(trials):
        op, _, v = _elliptic_pairs(ctx, rng)
        g = GridField(ctx.grid, v)
        ratios.append(norm_H1(GridField(ctx.grid, op.solve(v))) / norm_Hneg1(g) / ctx.ledger.C_o)
    return _ratio_report("pressure H1 bound", "elliptic-h1-bound", ratios, tol, ctx.seed)


def _check_elliptic_linearity(ctx, trials, tol):
    rng = ctx.rng(8)
    errs = []
    for _ in range(trials):
        op, _, v1 = _elliptic_pairs(ctx, rng)
        v2 = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        a, b = rng.uniform(-2, 2, size=2)
        lhs = op.solve(a * v1 + b * v2)
        rhs = a * op.solve(v1) + b * op.solve(v2)
        errs.append(norm_H1(GridField(ctx.grid, lhs - rhs)) / max(norm_H1(GridField(ctx.grid, lhs)), 1e-300))
    return _ratio_report("pressure linearity", "elliptic-linearity", errs, tol, ctx.seed, "relative H1 error")


def _check_elliptic_lipschitz(ctx, trials, tol):
    rng = ctx.rng(9)
    th = ctx.p.theta_2
    ratios = []
    for _ in range(trials):
        w1, w2 = ctx.member(rng), ctx.member(rng)
        v = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        du = FluxOperator(ctx.grid, w1, th).solve(v) - FluxOperator(ctx.grid, w2, th).solve(v)
        denom = ctx.ledger.C_o_star * norm_Hneg1(GridField(ctx.grid, v)) * ctx.h2(w1 - w2)
        ratios.append(norm_H1(GridField(ctx.grid, du)) / denom)
    return _ratio_report("pressure Lipschitz in w", "elliptic-lipschitz-w", ratios, tol, ctx.seed)


def _check_dv_lipschitz(ctx, trials, tol):
    rng = ctx.rng(10)
    ratios = []
    for _ in range(trials):
        op, _, _ = _elliptic_pairs(ctx, rng)
        p1 = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        p2 = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        num = norm_H1(GridField(ctx.grid, op.solve(p1) - op.solve(p2)))
        ratios.append(num / (ctx.ledger.C_o * norm_Hneg1(GridField(ctx.grid, p1 - p2))))
    return _ratio_report("D_v Lipschitz", "dv-lipschitz", ratios, tol, ctx.seed)


def _check_dw_lipschitz(ctx, trials, tol):
    rng = ctx.rng(11)
    ratios = []
    for _ in range(trials):
        op, _, v = _elliptic_pairs(ctx, rng)
        u = op.solve(v)
        s1 = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        s2 = coeffs_to_nodal(ctx.grid, random_coeffs(ctx.grid, rng))
        num = norm_H1(GridField(ctx.grid, op.solve_w_derivative(s1, u) - op.solve_w_derivative(s2, u)))
        denom = ctx.ledger.C_o_star * norm_Hneg1(GridField(ctx.grid, v)) * ctx.h2(s1 - s2)
        ratios.append(num / denom)
    return _ratio_report("D_w Lipschitz", "dw-lipschitz", ratios, tol, ctx.seed)


def _check_unitarity(ctx, trials, tol):
    rng = ctx.rng(12)
    op = PinnedOperator(ctx.grid)
    errs = []
    for _ in range(trials):
        v, w = random_coeffs(ctx.grid, rng), random_coeffs(ctx.grid, rng)
        t = rng.uniform(0.0, 100.0)
        n0 = op.norm(v, w)
        errs.append(abs(op.norm(*op.rotate(v, w, t)) - n0) / n0)
    return _ratio_report("group unitarity", "unitarity", errs, tol, ctx.seed, "relative X-norm change")


def _check_contraction(ctx, trials, tol):
    res = ctx.picard
    ratios = res.ratios or [0.0]
    note = f"{res.iterations} iterations on T = T0/2"
    return _ratio_report("Picard contraction", "picard-contraction", ratios, tol, ctx.seed, note)


def _check_time_lipschitz(ctx, trials, tol):
    rep = lipschitz_in_time_report(ctx.picard.trajectory, ctx.ledger)
    ratio = rep.max_ratio / rep.L_V if math.isfinite(rep.L_V) and rep.L_V > 0 else 0.0
    return _ratio_report("time Lipschitz", "time-lipschitz", [ratio], tol, ctx.seed, f"{rep.pairs} pairs")


def _check_tangent(ctx, trials, tol):
    cfg = ctx.coarse
    traj = ctx.coarse_traj
    tan = tangent_solve(cfg, traj)
    i = len(traj) // 2
    errs = tangent_fd_errors(traj, tan, i)
    orders = observed_orders(errs)
    worst = float(np.max(np.abs(orders - 2.0)))
    note = "orders " + ", ".join(f"{o:.3f}" for o in orders)
    return OracleReport("tangent finite differences", "tangent-fd", worst, tol, bool(worst <= tol), len(errs), note, ctx.seed)


CHECKS = {
    "ball-lower-bound": _check_ball,
    "inverse-power-h2-bound": _check_inverse_powers,
    "inverse-power-lipschitz": _check_inverse_lipschitz,
    "G-time-holder": _check_G_time,
    "G-lipschitz": _check_G_lipschitz,
    "G-ball-bound": _check_G_ball,
    "G-prime-bound": _check_Gprime_bound,
    "G-prime-continuity": _check_Gprime_continuity,
    "elliptic-h1-bound": _check_elliptic_bound,
    "elliptic-linearity": _check_elliptic_linearity,
    "elliptic-lipschitz-w": _check_elliptic_lipschitz,
    "dv-lipschitz": _check_dv_lipschitz,
    "dw-lipschitz": _check_dw_lipschitz,
    "derivative-moduli": _check_alpha,
    "unitarity": _check_unitarity,
    "picard-contraction": _check_contraction,
    "time-lipschitz": _check_time_lipschitz,
    "tangent-fd": _check_tangent,
}


def run_estimate_suite(cfg: SimConfig, trials: int, *, tolerances=None, seed=None, only=None, workers=1):
    """Run every check with ``trials`` random samples; reports sorted by name.

    ``trials=0`` returns an empty list. ``tolerances`` maps anchor names to
    tolerances and overrides the shipped manifest.
    """
    if trials < 0:
        raise ConfigurationError("trials must be non-negative")
    if trials == 0:
        log.warning("estimate suite run with zero trials; nothing checked")
        return []
    seed = cfg.seed if seed is None else seed
    tol = load_tolerances()
    if tolerances:
        tol.update(tolerances)
    ctx = _Context(cfg, seed)
    names = [n for n in CHECKS if only is None or n in only]
    # shared lazy state is built up front so checks can run concurrently
    _ = ctx.picard
    interval_only = ("G-prime-continuity", "derivative-moduli", "tangent-fd")
    if cfg.grid.ndim != 1:
        log.warning("skipping %s on a rectangle", ", ".join(interval_only))
        names = [n for n in names if n not in interval_only]
    elif any(n in interval_only for n in names):
        _ = ctx.moduli

    def run(name):
        return CHECKS[name](ctx, trials, tol[name])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, names))
    else:
        reports = [run(n) for n in names]
    return sorted(reports, key=lambda r: r.name)
