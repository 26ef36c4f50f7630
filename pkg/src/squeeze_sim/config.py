"""Run configuration and its INI serialization.

Example::

    [domain]
    length = 1.0
    n_interior = 128

    [physics]
    beta_F = 0.1
    beta_p = 0.1
    theta_1 = 1.0
    theta_2 = 1.0

    [initial]
    w0_tilde_modes = 1:0.2
    v0_modes =

    [solver]
    horizon = 0.01
    dt = 1e-4

Initial fields are sums of sine modes (``k:amplitude`` in 1-D,
``kx x ky:amplitude`` on a rectangle) or explicit nodal values
(``w0_tilde_values``, comma separated).
"""

from __future__ import annotations

import configparser
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError
from .nonlinearity import PhysParams, quench_threshold
from .spectral import Grid1D, Grid2DRect, GridField


@dataclass(frozen=True, eq=False)
class SimConfig:
    params: PhysParams
    grid: Grid1D | Grid2DRect
    initial_v0: GridField
    initial_w0_tilde: GridField
    horizon: float
    dt: float
    picard_tol: float = 1e-10
    picard_max_iters: int = 40
    ball_radius: float | None = None
    window: float | None = None
    quench_margin: float = 0.0
    quench_floor: float = 1e-8
    store_every: int = 1
    snapshot_every: int = 0
    seed: int = 0
    initial_spec: dict = field(default_factory=dict)

    def __post_init__(self):
        for f in (self.initial_v0, self.initial_w0_tilde):
            if f.grid != self.grid:
                raise ConfigurationError("initial fields must live on the configured grid")
            if not np.all(np.isfinite(f.values)):
                raise ConfigurationError("initial fields must be finite")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ConfigurationError(f"horizon must be positive, got {self.horizon!r}")
        if not (0 < self.dt <= self.horizon):
            raise ConfigurationError(f"dt must lie in (0, horizon], got {self.dt!r}")
        if self.picard_tol <= 0 or self.picard_max_iters < 1:
            raise ConfigurationError("picard_tol must be positive and picard_max_iters >= 1")
        if self.window is not None and self.window <= 0:
            raise ConfigurationError("window must be positive")
        if self.store_every < 1 or self.snapshot_every < 0:
            raise ConfigurationError("store_every must be >= 1 and snapshot_every >= 0")
        if not (0.0 <= self.quench_margin < 1.0) or self.quench_floor <= 0:
            raise ConfigurationError("quench_margin must lie in [0, 1) and quench_floor be positive")

    @property
    def initial_gap(self):
        """kappa: minimum of the whole initial field, boundary included."""
        vals = self.initial_w0_tilde.values + self.params.theta_2
        return float(min(np.min(vals), self.params.theta_2))

    def quench_threshold(self, kappa=None):
        k = self.initial_gap if kappa is None else kappa
        return quench_threshold(k, self.quench_margin, self.quench_floor)

    def with_(self, **changes):
        return replace(self, **changes)


# -- parsing ----------------------------------------------------------------------


def _parse_modes(text, grid):
    vals = np.zeros(grid.shape)
    text = (text or "").strip()
    if not text:
        return vals
    mesh = np.meshgrid(*grid.axes, indexing="ij")
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            key, amp = item.split(":")
            ks = [int(k) for k in key.lower().split("x")]
            amp = float(amp)
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse mode entry {item!r}") from exc
        if len(ks) != grid.ndim or min(ks) < 1:
            raise ConfigurationError(f"mode entry {item!r} does not match a {grid.ndim}-d grid")
        term = np.ones(grid.shape)
        for k, x, L in zip(ks, mesh, grid.lengths):
            term = term * np.sin(k * math.pi * x / L)
        vals += amp * term
    return vals


def _parse_values(text, grid):
    try:
        arr = np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise ConfigurationError("cannot parse nodal values") from exc
    if arr.size != int(np.prod(grid.shape)):
        raise ConfigurationError(f"expected {int(np.prod(grid.shape))} nodal values, got {arr.size}")
    return arr.reshape(grid.shape)


def _field(sec, name, grid, spec):
    if sec.get(f"{name}_values", "").strip():
        spec[f"{name}_values"] = sec[f"{name}_values"]
        return GridField(grid, _parse_values(sec[f"{name}_values"], grid))
    spec[f"{name}_modes"] = sec.get(f"{name}_modes", "")
    return GridField(grid, _parse_modes(spec[f"{name}_modes"], grid))


def _opt_float(sec, key, default=None):
    raw = sec.get(key, "").strip().lower()
    if raw in ("", "auto", "none"):
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{key} must be a number, got {raw!r}") from exc


def config_from_parser(cp: configparser.ConfigParser) -> SimConfig:
    for section in ("domain", "physics", "solver"):
        if not cp.has_section(section):
            raise ConfigurationError(f"missing [{section}] section")
    d, ph, so = cp["domain"], cp["physics"], cp["solver"]
    ini = cp["initial"] if cp.has_section("initial") else {}
    try:
        if "length_y" in d:
            grid = Grid2DRect(
                float(d["length_x"]), float(d["length_y"]), int(d["nx"]), int(d["ny"]),
                int(d["kx"]) if "kx" in d else None, int(d["ky"]) if "ky" in d else None,
            )
        else:
            grid = Grid1D(float(d["length"]), int(d["n_interior"]), int(d["n_modes"]) if "n_modes" in d else None)
        params = PhysParams(float(ph["beta_F"]), float(ph["beta_p"]), float(ph["theta_1"]), float(ph["theta_2"]))
        spec = {}
        w0 = _field(ini, "w0_tilde", grid, spec)
        v0 = _field(ini, "v0", grid, spec)
        return SimConfig(
            params=params,
            grid=grid,
            initial_v0=v0,
            initial_w0_tilde=w0,
            horizon=float(so["horizon"]),
            dt=float(so["dt"]),
            picard_tol=float(so.get("picard_tol", 1e-10)),
            picard_max_iters=int(so.get("picard_max_iters", 40)),
            ball_radius=_opt_float(so, "ball_radius"),
            window=_opt_float(so, "window"),
            quench_margin=float(so.get("quench_margin", 0.0)),
            quench_floor=float(so.get("quench_floor", 1e-8)),
            store_every=int(so.get("store_every", 1)),
            snapshot_every=int(so.get("snapshot_every", 0)),
            seed=int(cp["run"].get("seed", 0)) if cp.has_section("run") else 0,
            initial_spec=spec,
        )
    except KeyError as exc:
        raise ConfigurationError(f"missing config key {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc


def config_to_parser(cfg: SimConfig) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    g = cfg.grid
    if isinstance(g, Grid2DRect):
        cp["domain"] = {
            "length_x": repr(g.length_x), "length_y": repr(g.length_y),
            "nx": str(g.nx), "ny": str(g.ny), "kx": str(g.kx), "ky": str(g.ky),
        }
    else:
        cp["domain"] = {"length": repr(g.length), "n_interior": str(g.n_interior), "n_modes": str(g.n_modes)}
    p = cfg.params
    cp["physics"] = {"beta_F": repr(p.beta_F), "beta_p": repr(p.beta_p), "theta_1": repr(p.theta_1), "theta_2": repr(p.theta_2)}
    initial = {}
    for name, fld in (("w0_tilde", cfg.initial_w0_tilde), ("v0", cfg.initial_v0)):
        if f"{name}_modes" in cfg.initial_spec:
            initial[f"{name}_modes"] = cfg.initial_spec[f"{name}_modes"]
        elif f"{name}_values" in cfg.initial_spec:
            initial[f"{name}_values"] = cfg.initial_spec[f"{name}_values"]
        else:
            initial[f"{name}_values"] = ", ".join(repr(float(x)) for x in fld.values.ravel())
    cp["initial"] = initial
    cp["solver"] = {
        "horizon": repr(cfg.horizon),
        "dt": repr(cfg.dt),
        "picard_tol": repr(cfg.picard_tol),
        "picard_max_iters": str(cfg.picard_max_iters),
        "ball_radius": "auto" if cfg.ball_radius is None else repr(cfg.ball_radius),
        "window": "none" if cfg.window is None else repr(cfg.window),
        "quench_margin": repr(cfg.quench_margin),
        "quench_floor": repr(cfg.quench_floor),
        "store_every": str(cfg.store_every),
        "snapshot_every": str(cfg.snapshot_every),
    }
    cp["run"] = {"seed": str(cfg.seed)}
    return cp


def config_to_ini(cfg: SimConfig) -> str:
    buf = io.StringIO()
    config_to_parser(cfg).write(buf)
    return buf.getvalue()


def config_to_dict(cfg: SimConfig) -> dict:
    return {s: dict(cp) for s, cp in config_to_parser(cfg).items() if s != "DEFAULT"}


def config_from_dict(data: dict) -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_dict(data)
    return config_from_parser(cp)


def load_config(path) -> SimConfig:
    """Read an INI config, or the ``config`` block of a run manifest (JSON)."""
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc.strerror}") from exc
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON in {path!r}") from exc
        return config_from_dict(data.get("config", data))
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config {path!r}: {exc}") from exc
    return config_from_parser(cp)


def reference_config(n_interior=128, n_modes=None, horizon=0.01, dt=1e-4, **overrides) -> SimConfig:
    """Unit interval, theta = 1, beta_F = beta_p = 0.1, w0_tilde = 0.2 sin(pi x), v0 = 0."""
    data = {
        "domain": {"length": "1.0", "n_interior": str(n_interior)},
        "physics": {"beta_F": "0.1", "beta_p": "0.1", "theta_1": "1.0", "theta_2": "1.0"},
        "initial": {"w0_tilde_modes": "1:0.2", "v0_modes": ""},
        "solver": {"horizon": repr(horizon), "dt": repr(dt)},
    }
    if n_modes is not None:
        data["domain"]["n_modes"] = str(n_modes)
    cfg = config_from_dict(data)
    return replace(cfg, **overrides) if overrides else cfg
