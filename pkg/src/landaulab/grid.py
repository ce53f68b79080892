"""Velocity-space discretization, distribution snapshots, and quadrature primitives.

The grid is a cell-centered uniform Cartesian lattice on [-L, L]^3: nodes sit
at v_k = -L + (k + 1/2) h with h = 2L/N, so no node ever coincides with the
origin and singular kernels are never evaluated at zero.  All integrals are
midpoint quadratures with uniform weight h^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainTruncationError, GridMismatchError, InvalidParameterError


class VelocityGrid:
    """Cell-centered uniform grid on [-L, L]^3 with N nodes per axis.

    Parameters
    ----------
    half_width : float
        Domain half-width L (> 0).  Default runs use L = 8 thermal radii,
        which keeps the relative Gaussian mass outside the box below 1e-12.
    points_per_axis : int
        Even positive node count N per axis.
    """

    def __init__(self, half_width: float, points_per_axis: int):
        if not (half_width > 0):
            raise InvalidParameterError(f"half_width must be > 0, got {half_width}")
        n = int(points_per_axis)
        if n != points_per_axis or n <= 0 or n % 2 != 0:
            raise InvalidParameterError(
                f"points_per_axis must be an even positive integer, got {points_per_axis}"
            )
        self.half_width = float(half_width)
        self.points_per_axis = n
        self.spacing = 2.0 * self.half_width / n

    def __eq__(self, other):
        return (
            isinstance(other, VelocityGrid)
            and self.half_width == other.half_width
            and self.points_per_axis == other.points_per_axis
        )

    def __hash__(self):
        return hash((self.half_width, self.points_per_axis))

    def __repr__(self):
        return f"VelocityGrid(L={self.half_width}, N={self.points_per_axis})"

    @cached_property
    def axis(self) -> np.ndarray:
        """1-D node coordinates, symmetric about 0 and strictly inside (-L, L)."""
        n = self.points_per_axis
        # (k - (N-1)/2) * h is exactly antisymmetric, unlike -L + (k+1/2)*h.
        return (np.arange(n) - (n - 1) / 2.0) * self.spacing

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (N, N, N, 3), axes indexed (x, y, z)."""
        ax = self.axis
        out = np.empty((len(ax),) * 3 + (3,))
        out[..., 0], out[..., 1], out[..., 2] = np.meshgrid(ax, ax, ax, indexing="ij")
        return out

    @cached_property
    def speed(self) -> np.ndarray:
        """|v| at every node, shape (N, N, N)."""
        return np.sqrt(self.speed_squared)

    @cached_property
    def speed_squared(self) -> np.ndarray:
        ax2 = self.axis**2
        return ax2[:, None, None] + ax2[None, :, None] + ax2[None, None, :]

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.points_per_axis
        return (n, n, n)


@dataclass(frozen=True)
class DistributionState:
    """A nonnegative scalar field on a :class:`VelocityGrid` at one instant."""

    grid: VelocityGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {vals.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidParameterError("distribution values must be finite")
        if vals.min(initial=0.0) < 0.0:
            raise InvalidParameterError("distribution values must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time", float(self.time))

    def with_values(self, values, time=None) -> "DistributionState":
        return DistributionState(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True)
class Cylinder:
    """Scaling-adapted space-time-velocity neighborhood of a point z0 = (t0, x0, v0).

    Extends over times (t0 - r^2, t0], the spatial slab |x - x0 - t v0| < r^3
    and the velocity ball B_r(v0).
    """

    t0: float
    x0: tuple[float, float, float]
    v0: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise InvalidParameterError(f"cylinder radius must be > 0, got {self.radius}")

    @property
    def time_interval(self) -> tuple[float, float]:
        return (self.t0 - self.radius**2, self.t0)

    @property
    def space_half_width(self) -> float:
        return self.radius**3

    @property
    def velocity_radius(self) -> float:
        return self.radius


def make_maxwellian(grid: VelocityGrid, mass=1.0, mean=(0.0, 0.0, 0.0), temperature=1.0) -> DistributionState:
    """Sample the Gaussian mass * (2 pi T)^{-3/2} exp(-|v - mean|^2 / (2T))."""
    if not (mass > 0):
        raise InvalidParameterError(f"mass must be > 0, got {mass}")
    if not (temperature > 0):
        raise InvalidParameterError(f"temperature must be > 0, got {temperature}")
    mean = np.asarray(mean, dtype=float).reshape(3)
    d2 = np.zeros(grid.shape)
    ax = grid.axis
    d2 += ((ax - mean[0]) ** 2)[:, None, None]
    d2 += ((ax - mean[1]) ** 2)[None, :, None]
    d2 += ((ax - mean[2]) ** 2)[None, None, :]
    amp = mass * (2.0 * math.pi * temperature) ** -1.5
    return DistributionState(grid, amp * np.exp(-d2 / (2.0 * temperature)))


def make_gaussian_mixture(grid: VelocityGrid, masses, means, temperatures, time=0.0) -> DistributionState:
    """Sum of Maxwellians with the given component masses, means and temperatures."""
    masses = np.atleast_1d(np.asarray(masses, dtype=float))
    means = np.atleast_2d(np.asarray(means, dtype=float))
    temps = np.atleast_1d(np.asarray(temperatures, dtype=float))
    if not (len(masses) == len(means) == len(temps)):
        raise InvalidParameterError("mixture component lists must have equal length")
    vals = np.zeros(grid.shape)
    for m, mu, t in zip(masses, means, temps):
        vals += make_maxwellian(grid, m, mu, t).values
    return DistributionState(grid, vals, time)


def random_gaussian_mixture(grid: VelocityGrid, rng, n_components=3, mass_range=(0.2, 1.0),
                            mean_scale=1.0, temp_range=(0.5, 1.5)) -> DistributionState:
    """Seeded random mixture used by the randomized audit families."""
    masses = rng.uniform(*mass_range, size=n_components)
    means = rng.normal(scale=mean_scale, size=(n_components, 3))
    temps = rng.uniform(*temp_range, size=n_components)
    return make_gaussian_mixture(grid, masses, means, temps)


def moment(f: DistributionState, s: float) -> float:
    """Velocity moment integral of |v|^s f by midpoint quadrature."""
    if s < 0:
        raise InvalidParameterError(f"moment order must be >= 0, got {s}")
    w = f.grid.speed_squared ** (s / 2.0) if s != 0 else 1.0
    return float(np.sum(w * f.values) * f.grid.cell_volume)


def directional_second_moments(f: DistributionState) -> np.ndarray:
    """Per-axis second moments (integral of v_i^2 f), shape (3,)."""
    ax2 = f.grid.axis**2
    h3 = f.grid.cell_volume
    return np.array(
        [
            float(np.sum(ax2[:, None, None] * f.values) * h3),
            float(np.sum(ax2[None, :, None] * f.values) * h3),
            float(np.sum(ax2[None, None, :] * f.values) * h3),
        ]
    )


def momentum(f: DistributionState) -> np.ndarray:
    """Integral of v f, shape (3,)."""
    ax = f.grid.axis
    h3 = f.grid.cell_volume
    return np.array(
        [
            float(np.sum(ax[:, None, None] * f.values) * h3),
            float(np.sum(ax[None, :, None] * f.values) * h3),
            float(np.sum(ax[None, None, :] * f.values) * h3),
        ]
    )


def lp_norm(f: DistributionState, p) -> float:
    """L^p quadrature norm; p = inf returns the max node value."""
    if p == math.inf or p == np.inf:
        return float(f.values.max(initial=0.0))
    p = float(p)
    if p < 1:
        raise InvalidParameterError(f"lp_norm requires p >= 1 or p = inf, got {p}")
    total = float(np.sum(f.values**p) * f.grid.cell_volume)
    return total ** (1.0 / p)


def inf_on_ball(f: DistributionState, radius: float) -> float:
    """Minimum of f over grid nodes with |v| <= radius."""
    if not (0 < radius <= f.grid.half_width):
        raise DomainTruncationError(
            f"ball radius must lie in (0, L] = (0, {f.grid.half_width}], got {radius}"
        )
    mask = f.grid.speed_squared <= radius**2
    if not mask.any():
        raise DomainTruncationError(f"no grid node inside the ball of radius {radius}")
    return float(f.values[mask].min())


def entropy(f: DistributionState, floor: float = 1e-300) -> float:
    """Integral of f log f (zero cells contribute zero)."""
    vals = f.values
    logs = np.log(np.clip(vals, floor, None))
    return float(np.sum(np.where(vals > 0, vals * logs, 0.0)) * f.grid.cell_volume)
