"""Kernel density estimation in the hybrid binary x continuous setup.

The combined sample ``y`` carries a 0/1 label per observation. Everything is
evaluated on a uniform grid, which is the common carrier for the quadratures
used by the divergence and moment code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateSample, GridMismatch, OneGroupEmpty

__all__ = [
    "EPANECHNIKOV",
    "DENSITY_FLOOR",
    "DensityGrid",
    "KernelConstants",
    "KernelSpec",
    "bandwidth_silverman",
    "build_grid",
    "estimate_joint_xy",
    "estimate_marginal_x",
    "estimate_marginal_y",
    "kernel_constants",
    "kernel_eval",
    "kernel_matrix",
    "trapezoid",
]

#: Grid points with a density at or below this value are treated as outside
#: the support when integrating over ``{f_y > 0}``.
DENSITY_FLOOR = 1e-12

DEFAULT_GRID_POINTS = 512
MIN_GRID_POINTS = 64


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "epanechnikov"
    support_radius: float = 1.0

    def __post_init__(self):
        if self.kind != "epanechnikov":
            raise ValueError(f"unknown kernel kind {self.kind!r}")


EPANECHNIKOV = KernelSpec()


def kernel_eval(spec: KernelSpec, u):
    """Evaluate the kernel at ``u`` (scalar or array)."""
    u = np.asarray(u, dtype=float)
    r = spec.support_radius
    out = 0.75 * (1.0 - (u / r) ** 2) / r
    out = np.where(np.abs(u) <= r, out, 0.0)
    return float(out) if out.ndim == 0 else out


def trapezoid(values, spacing: float) -> float:
    """Composite trapezoid rule on a uniform grid."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(spacing * (v.sum(axis=-1) - 0.5 * (v[..., 0] + v[..., -1])))


@dataclass(frozen=True)
class DensityGrid:
    """A nonnegative function sampled on a uniform grid.

    ``points`` and ``values`` are stored as read-only arrays.
    """

    points: np.ndarray
    values: np.ndarray
    spacing: float = field(default=float("nan"))

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        vals = np.array(self.values, dtype=float)
        if pts.ndim != 1 or pts.shape != vals.shape:
            raise ValueError("points and values must be 1-d arrays of equal length")
        if pts.size < 2 or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("density values must be finite and nonnegative")
        spacing = (pts[-1] - pts[0]) / (pts.size - 1)
        if not np.allclose(np.diff(pts), spacing, rtol=1e-6, atol=0.0):
            raise ValueError("grid points must be uniformly spaced")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "spacing", float(spacing))

    def integral(self) -> float:
        return trapezoid(self.values, self.spacing)

    def same_grid(self, other: "DensityGrid") -> bool:
        return self.points.shape == other.points.shape and np.array_equal(
            self.points, other.points
        )

    def check_grid(self, other: "DensityGrid") -> None:
        if not self.same_grid(other):
            raise GridMismatch("density grids differ")

    def with_values(self, values) -> "DensityGrid":
        return DensityGrid(self.points, values)

    def is_probability_density(self, tol: float = 1e-3) -> bool:
        return abs(self.integral() - 1.0) <= tol


@dataclass(frozen=True)
class KernelConstants:
    """``c1`` = integral of K^2, ``c2`` = integral of the squared self-convolution."""

    c1: float
    c2: float

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("kernel constants must be positive")


@lru_cache(maxsize=16)
def kernel_constants(spec: KernelSpec = EPANECHNIKOV, quad_points: int = 4001) -> KernelConstants:
    """Kernel constants by trapezoid quadrature over the kernel support.

    The self-convolution is evaluated on a lag grid with the same spacing as
    the inner grid, so the discrete convolution of the sampled kernel is the
    trapezoid rule for every lag.
    """
    if quad_points < 64:
        raise ValueError("quad_points must be at least 64")
    r = spec.support_radius
    z = np.linspace(-r, r, quad_points)
    dz = z[1] - z[0]
    k = kernel_eval(spec, z)
    c1 = trapezoid(k * k, dz)
    # Both ends of every lag's overlap window sit on a kernel zero, so the
    # plain discrete convolution equals the trapezoid rule.
    conv = np.convolve(k, k) * dz
    c2 = trapezoid(conv * conv, dz)
    return KernelConstants(c1=c1, c2=c2)


def bandwidth_silverman(y) -> float:
    """Rule-of-thumb bandwidth ``1.06 * sd(y) * n**(-1/5)`` (sd with ddof=1)."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 2:
        raise DegenerateSample("need at least two observations for a bandwidth")
    sd = float(np.std(y, ddof=1))
    if not sd > 0:
        raise DegenerateSample("sample has zero standard deviation")
    return 1.06 * sd * n ** (-0.2)


def build_grid(
    y, h: float, n_points: int = DEFAULT_GRID_POINTS, min_points: int = MIN_GRID_POINTS
) -> np.ndarray:
    """Uniform grid over ``[min(y) - 3h, max(y) + 3h]``.

    ``min_points`` guards against grids too coarse for the quadratures; it can
    be lowered (to no less than 2) for hand-checkable toy grids.
    """
    if n_points < max(min_points, 2):
        raise ValueError(f"n_points must be at least {max(min_points, 2)}, got {n_points}")
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    y = np.asarray(y, dtype=float)
    return np.linspace(y.min() - 3.0 * h, y.max() + 3.0 * h, n_points)


def estimate_marginal_x(labels) -> tuple[float, float]:
    """Relative frequencies of the two labels."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise OneGroupEmpty("no labels")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0/1")
    n1 = int(np.count_nonzero(labels))
    n0 = labels.size - n1
    if n0 == 0 or n1 == 0:
        raise OneGroupEmpty("both label groups must be nonempty")
    return n0 / labels.size, n1 / labels.size


def kernel_matrix(y, h: float, grid, spec: KernelSpec = EPANECHNIKOV) -> np.ndarray:
    """Scaled kernel weights ``K((y_i - g_j)/h) / (n h)``, shape (n, len(grid))."""
    y = np.asarray(y, dtype=float)
    grid = np.asarray(grid, dtype=float)
    u = (y[:, None] - grid[None, :]) / h
    return kernel_eval(spec, u) / (y.size * h)


def estimate_marginal_y(y, h: float, grid, spec: KernelSpec = EPANECHNIKOV) -> DensityGrid:
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    km = kernel_matrix(y, h, grid, spec)
    return DensityGrid(grid, km.sum(axis=0))


def estimate_joint_xy(y, labels, x: int, h: float, grid, spec: KernelSpec = EPANECHNIKOV) -> DensityGrid:
    """KDE sum restricted to observations labelled ``x``; normalised by the full n."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    if x not in (0, 1):
        raise ValueError("x must be 0 or 1")
    labels = np.asarray(labels)
    km = kernel_matrix(y, h, grid, spec)
    return DensityGrid(grid, km[labels == x].sum(axis=0))
