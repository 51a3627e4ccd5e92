"""Discretized linear-optical impulse-response kernels.

A kernel maps a complex field sampled on an input grid to a field on an
output grid.  The two physical kernels here are the paraxial free-space
propagator and the Fourier-transforming lens in 2f configuration; a
double-slit plane composes two kernels into a two-path system response.
All kernels drop constant prefactors: every downstream quantity is
normalized, so only relative phase and amplitude matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CompositionError, InvalidParameterError, OutOfRangeError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1-D grid of sample positions, in meters."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParameterError(f"grid needs n >= 2, got {self.n}")
        if not self.x_max > self.x_min:
            raise InvalidParameterError(
                f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]"
            )

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def positions(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def extent(self) -> float:
        return self.x_max - self.x_min

    @classmethod
    def centered(cls, half_width: float, n: int) -> "SpatialGrid":
        return cls(-half_width, half_width, n)

    @classmethod
    def cell_centered(cls, width: float, n: int) -> "SpatialGrid":
        """Grid whose nodes are the midpoints of ``n`` cells tiling
        ``[-width/2, width/2]``.

        With the rectangle quadrature weight ``spacing`` this sums to the
        exact interval length, which matters for closed-form comparisons.
        """
        h = width / n
        return cls(-width / 2 + h / 2, width / 2 - h / 2, n)

    def contains(self, x: float) -> bool:
        return self.x_min <= x <= self.x_max

    def nearest_index(self, x: float) -> int:
        if not self.contains(x):
            raise OutOfRangeError(
                f"position {x} outside grid [{self.x_min}, {self.x_max}]"
            )
        return int(round((x - self.x_min) / self.spacing))


@dataclass(frozen=True)
class SlitPair:
    """Double slit: separation between slit centers and individual width.

    Slits sit symmetrically about the axis at -separation/2, +separation/2.
    """

    separation: float
    width: float = 0.0

    def __post_init__(self):
        if self.separation <= 0:
            raise InvalidParameterError("slit separation must be positive")
        if not 0 <= self.width < self.separation:
            raise InvalidParameterError(
                "slit width must satisfy 0 <= width < separation"
            )

    @property
    def x1(self) -> float:
        return -self.separation / 2

    @property
    def x2(self) -> float:
        return self.separation / 2


@dataclass(frozen=True)
class LinearKernel:
    """Complex impulse response h(x_out, x_in) between two grids.

    ``values[j, i]`` is the amplitude transferred from ``grid_in`` node i to
    ``grid_out`` node j.  Immutable; safe to share across threads.
    """

    grid_in: SpatialGrid
    grid_out: SpatialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid_out.n, self.grid_in.n):
            raise InvalidParameterError(
                f"kernel shape {v.shape} does not match grids "
                f"({self.grid_out.n}, {self.grid_in.n})"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("kernel entries must be finite")

    def transposed(self) -> "LinearKernel":
        return LinearKernel(self.grid_out, self.grid_in, self.values.T)


def fourier_2f_kernel(
    grid_in: SpatialGrid,
    grid_out: SpatialGrid,
    wavelength: float,
    focal_length: float,
) -> LinearKernel:
    """Fourier-transforming lens, input and output one focal length away.

    h(x_out, x_in) = exp(-i 2 pi x_out x_in / (wavelength * focal_length)).
    """
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    if focal_length <= 0:
        raise InvalidParameterError("focal length must be positive")
    xo = grid_out.positions[:, None]
    xi = grid_in.positions[None, :]
    phase = -2.0 * np.pi * xo * xi / (wavelength * focal_length)
    return LinearKernel(grid_in, grid_out, np.exp(1j * phase))


def fresnel_kernel(
    grid_in: SpatialGrid,
    grid_out: SpatialGrid,
    wavelength: float,
    distance: float,
) -> LinearKernel:
    """Paraxial free-space propagator over ``distance``.

    h(x_out, x_in) = exp(i pi (x_out - x_in)^2 / (wavelength * distance)).
    Constant prefactor dropped; contact imaging (distance <= 0) is not
    modeled.
    """
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    if distance <= 0:
        raise InvalidParameterError("propagation distance must be positive")
    dx = grid_out.positions[:, None] - grid_in.positions[None, :]
    phase = np.pi * dx * dx / (wavelength * distance)
    return LinearKernel(grid_in, grid_out, np.exp(1j * phase))


def _slit_indices(grid: SpatialGrid, center: float, width: float) -> np.ndarray:
    if width == 0.0:
        return np.array([grid.nearest_index(center)])
    lo, hi = center - width / 2, center + width / 2
    if not (grid.contains(lo) and grid.contains(hi)):
        raise OutOfRangeError(
            f"slit [{lo}, {hi}] extends outside grid "
            f"[{grid.x_min}, {grid.x_max}]"
        )
    x = grid.positions
    eps = 1e-9 * grid.spacing
    idx = np.nonzero((x >= lo - eps) & (x <= hi + eps))[0]
    if idx.size == 0:
        idx = np.array([grid.nearest_index(center)])
    return idx


def slit_rows(kernel: LinearKernel, slits: SlitPair) -> tuple[np.ndarray, np.ndarray]:
    """Kernel rows h(x1, .), h(x2, .) at the two slit positions.

    With zero slit width the nearest grid node is used; a finite width
    averages the rows over the nodes spanned by each slit.
    """
    rows = []
    for c in (slits.x1, slits.x2):
        idx = _slit_indices(kernel.grid_out, c, slits.width)
        rows.append(kernel.values[idx].mean(axis=0))
    return rows[0], rows[1]


def slit_columns(kernel: LinearKernel, slits: SlitPair) -> tuple[np.ndarray, np.ndarray]:
    """Kernel columns h(., x1), h(., x2); the slits lie on ``grid_in``."""
    return slit_rows(kernel.transposed(), slits)


def compose_two_path(
    h1: LinearKernel, h2: LinearKernel, slits: SlitPair
) -> LinearKernel:
    """Two-path system response through a double slit.

    h(x_out, x_in) = h2(x_out, x1) h1(x1, x_in) + h2(x_out, x2) h1(x2, x_in),
    where the slit plane is h1's output grid and h2's input grid.
    """
    if h1.grid_out != h2.grid_in:
        raise CompositionError(
            "h1 output grid and h2 input grid differ; cannot compose"
        )
    r1, r2 = slit_rows(h1, slits)
    c1, c2 = slit_columns(h2, slits)
    values = np.outer(c1, r1) + np.outer(c2, r2)
    return LinearKernel(h1.grid_in, h2.grid_out, values)
