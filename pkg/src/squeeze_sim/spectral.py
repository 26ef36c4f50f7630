"""Sine-basis discretization on an interval or a rectangle.

Fields vanishing on the boundary are stored either as nodal values on the
interior nodes (:class:`GridField`) or as sine coefficients
(:class:`SpectralCoeffs`). The two are related by the type-I discrete sine
transform, under which the sine modes are exactly orthogonal. All norms are
evaluated on coefficients with the weight ``|Omega| / 2**d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import ConfigurationError


class _GridBase:
    """Shared spectral data; subclasses define lengths, shape and mode_shape."""

    @property
    def ndim(self):
        return len(self.lengths)

    @property
    def measure(self):
        return float(np.prod(self.lengths))

    @property
    def weight(self):
        """Parseval weight: ||f||_L2^2 = weight * sum(c**2)."""
        return self.measure / 2 ** self.ndim

    @cached_property
    def spacing(self):
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.shape))

    @cached_property
    def axes(self):
        """Interior node coordinates along each axis."""
        return tuple(np.arange(1, n + 1) * h for n, h in zip(self.shape, self.spacing))

    @cached_property
    def mu(self):
        """Dirichlet-Laplacian eigenvalues for the retained modes."""
        parts = [(np.arange(1, K + 1) * math.pi / L) ** 2 for K, L in zip(self.mode_shape, self.lengths)]
        return _outer_sum(parts)

    @cached_property
    def nu(self):
        """Eigenvalues of Delta^2 - Delta."""
        return self.mu + self.mu**2

    @cached_property
    def mode_integrals(self):
        """Integral of each sine mode over the domain."""
        parts = []
        for K, L in zip(self.mode_shape, self.lengths):
            k = np.arange(1, K + 1)
            parts.append(L * (1 - (-1.0) ** k) / (k * math.pi))
        out = parts[0]
        for p in parts[1:]:
            out = np.multiply.outer(out, p)
        return out

    @cached_property
    def basis_at_nodes(self):
        """Per-axis matrices sin(k pi x_j / L), shape (n, K)."""
        return tuple(
            np.sin(np.outer(x, np.arange(1, K + 1)) * math.pi / L)
            for x, K, L in zip(self.axes, self.mode_shape, self.lengths)
        )

    def zeros(self):
        return GridField(self, np.zeros(self.shape))

    def zero_coeffs(self):
        return SpectralCoeffs(self, np.zeros(self.mode_shape))

    def from_function(self, f):
        """Sample ``f(x)`` (1-D) or ``f(x, y)`` (2-D) on the interior nodes."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return GridField(self, np.asarray(f(*mesh), dtype=float) * np.ones(self.shape))

    def center_index(self):
        """Index of the interior node nearest the domain center."""
        return tuple(int(np.argmin(np.abs(x - L / 2))) for x, L in zip(self.axes, self.lengths))


def _outer_sum(parts):
    out = parts[0]
    for p in parts[1:]:
        out = np.add.outer(out, p)
    return out


def _check_positive_int(name, value):
    if int(value) != value or value < 1:
        raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True, eq=True)
class Grid1D(_GridBase):
    """Uniform grid on (0, L) with ``n_interior`` nodes and ``n_modes`` sine modes."""

    length: float
    n_interior: int
    n_modes: int | None = None

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ConfigurationError(f"length must be positive and finite, got {self.length!r}")
        _check_positive_int("n_interior", self.n_interior)
        if self.n_modes is None:
            object.__setattr__(self, "n_modes", int(self.n_interior))
        _check_positive_int("n_modes", self.n_modes)
        if self.n_modes > self.n_interior:
            raise ConfigurationError("n_modes may not exceed n_interior")

    @property
    def lengths(self):
        return (float(self.length),)

    @property
    def shape(self):
        return (int(self.n_interior),)

    @property
    def mode_shape(self):
        return (int(self.n_modes),)

    @property
    def h(self):
        return self.length / (self.n_interior + 1)

    @property
    def x(self):
        return self.axes[0]


@dataclass(frozen=True, eq=True)
class Grid2DRect(_GridBase):
    """Tensor grid on (0, Lx) x (0, Ly)."""

    length_x: float
    length_y: float
    nx: int
    ny: int
    kx: int | None = None
    ky: int | None = None

    def __post_init__(self):
        for name in ("length_x", "length_y"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ConfigurationError(f"{name} must be positive and finite, got {val!r}")
        _check_positive_int("nx", self.nx)
        _check_positive_int("ny", self.ny)
        if self.kx is None:
            object.__setattr__(self, "kx", int(self.nx))
        if self.ky is None:
            object.__setattr__(self, "ky", int(self.ny))
        _check_positive_int("kx", self.kx)
        _check_positive_int("ky", self.ky)
        if self.kx > self.nx or self.ky > self.ny:
            raise ConfigurationError("mode counts may not exceed node counts")

    @property
    def lengths(self):
        return (float(self.length_x), float(self.length_y))

    @property
    def shape(self):
        return (int(self.nx), int(self.ny))

    @property
    def mode_shape(self):
        return (int(self.kx), int(self.ky))


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values on interior nodes; homogeneous Dirichlet data implied."""

    grid: _GridBase
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(f"field shape {vals.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "values", vals)

    def __add__(self, other):
        return GridField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return GridField(self.grid, self.values - _vals(other))

    def __mul__(self, scalar):
        return GridField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Sine coefficients, one per retained mode."""

    grid: _GridBase
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != self.grid.mode_shape:
            raise ConfigurationError(f"coefficient shape {c.shape} does not match modes {self.grid.mode_shape}")
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other):
        return SpectralCoeffs(self.grid, self.coeffs + _coeffs_of(other))

    def __sub__(self, other):
        return SpectralCoeffs(self.grid, self.coeffs - _coeffs_of(other))

    def __mul__(self, scalar):
        return SpectralCoeffs(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralCoeffs(self.grid, -self.coeffs)


def _vals(f):
    return f.values if isinstance(f, GridField) else np.asarray(f, dtype=float)


def _coeffs_of(c):
    return c.coeffs if isinstance(c, SpectralCoeffs) else np.asarray(c, dtype=float)


# -- array-level transforms ---------------------------------------------------


def nodal_to_coeffs(grid, values):
    """Sine coefficients of nodal values, truncated to the retained modes."""
    full = scipy.fft.dstn(np.asarray(values, dtype=float), type=1)
    full /= float(np.prod([n + 1 for n in grid.shape]))
    return full[tuple(slice(0, K) for K in grid.mode_shape)]


def coeffs_to_nodal(grid, coeffs):
    """Evaluate a sine series on the interior nodes."""
    padded = np.zeros(grid.shape)
    padded[tuple(slice(0, K) for K in grid.mode_shape)] = coeffs
    return scipy.fft.dstn(padded, type=1) / 2**grid.ndim


def dst_forward(f: GridField) -> SpectralCoeffs:
    return SpectralCoeffs(f.grid, nodal_to_coeffs(f.grid, f.values))


def dst_inverse(c: SpectralCoeffs) -> GridField:
    return GridField(c.grid, coeffs_to_nodal(c.grid, c.coeffs))


def laplace_eigenvalue(grid, k):
    """Eigenvalue of -Delta for mode ``k`` (int in 1-D, pair on a rectangle)."""
    ks = (k,) if np.isscalar(k) else tuple(k)
    if len(ks) != grid.ndim or any(int(j) != j or j < 1 for j in ks):
        raise ConfigurationError(f"invalid mode index {k!r}")
    return float(sum((j * math.pi / L) ** 2 for j, L in zip(ks, grid.lengths)))


# -- norms ----------------------------------------------------------------------


def _as_coeffs(f):
    if isinstance(f, SpectralCoeffs):
        return f.grid, f.coeffs
    if isinstance(f, GridField):
        return f.grid, nodal_to_coeffs(f.grid, f.values)
    raise TypeError(f"expected GridField or SpectralCoeffs, got {type(f).__name__}")


def weighted_norm(grid, coeffs, weights):
    return math.sqrt(grid.weight * float(np.sum(weights * coeffs**2)))


def norm_L2(f):
    grid, c = _as_coeffs(f)
    return weighted_norm(grid, c, 1.0)


def norm_H1(f):
    grid, c = _as_coeffs(f)
    return weighted_norm(grid, c, 1.0 + grid.mu)


def norm_grad(f):
    grid, c = _as_coeffs(f)
    return weighted_norm(grid, c, grid.mu)


def norm_H2o(f):
    """Seminorm used in the energy space: ||grad f||^2 + ||Delta f||^2."""
    grid, c = _as_coeffs(f)
    return weighted_norm(grid, c, grid.nu)


def norm_H2(f, boundary_value=0.0):
    """Full H^2 norm of ``f``, whose boundary trace is the constant ``boundary_value``.

    ``f`` holds interior values of the whole field. The constant part is split
    off so that the remainder has homogeneous trace and a sine expansion.
    """
    if isinstance(f, SpectralCoeffs):
        if boundary_value != 0.0:
            raise ConfigurationError("a lifted norm needs nodal values")
        grid, c = f.grid, f.coeffs
    else:
        grid = f.grid
        c = nodal_to_coeffs(grid, _vals(f) - boundary_value)
    b = float(boundary_value)
    sq = grid.weight * float(np.sum((1.0 + grid.nu) * c**2))
    sq += b * b * grid.measure + 2.0 * b * float(np.sum(grid.mode_integrals * c))
    return math.sqrt(max(sq, 0.0))


def norm_Hneg1(f):
    """Dual norm of H^1_0 with respect to the gradient seminorm."""
    grid, c = _as_coeffs(f)
    return weighted_norm(grid, c, 1.0 / grid.mu)


def poincare_constant(grid):
    """Sharp Poincare constant 1/sqrt(mu_1)."""
    return 1.0 / math.sqrt(float(np.min(grid.mu)))


def random_coeffs(grid, rng, decay=3.0):
    """Random sine field with c_k ~ U(-1, 1) * |k|^-decay."""
    idx = np.meshgrid(*[np.arange(1, K + 1) for K in grid.mode_shape], indexing="ij")
    kmag = np.sqrt(sum(i.astype(float) ** 2 for i in idx))
    return rng.uniform(-1.0, 1.0, size=grid.mode_shape) * kmag ** (-decay)


def sup_ratio(f):
    """||f||_inf / ||f||_H2 for a field with homogeneous trace."""
    grid, c = _as_coeffs(f)
    denom = weighted_norm(grid, c, 1.0 + grid.nu)
    if denom == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs_to_nodal(grid, c)))) / denom


def embedding_constant_estimate(grid, n_random=64, seed=0):
    """Upper estimate of sup ||f||_inf / ||f||_H2 over the discrete sine space.

    At each node the supremum over coefficient vectors is attained by
    Cauchy-Schwarz, which gives the exact discrete constant. Random smooth
    fields and the individual sine modes are probed as well, and the maximum of
    all candidates is returned.
    """
    lam = 1.0 + grid.nu
    sq = grid.basis_at_nodes[0] ** 2 @ (1.0 / lam) if grid.ndim == 1 else None
    if grid.ndim == 2:
        bx, by = grid.basis_at_nodes
        sq = (bx**2) @ (1.0 / lam) @ (by**2).T
    best = math.sqrt(float(np.max(sq)) / grid.weight)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        best = max(best, sup_ratio(SpectralCoeffs(grid, random_coeffs(grid, rng))))
    for k in range(min(grid.mode_shape[0], 8)):
        c = np.zeros(grid.mode_shape)
        c[(k,) + (0,) * (grid.ndim - 1)] = 1.0
        best = max(best, sup_ratio(SpectralCoeffs(grid, c)))
    return best
