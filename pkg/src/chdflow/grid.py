"""Uniform vertex-centered grids, scalar fields, and error/convergence metrics.

Every other module builds on the types here.  Grids are vertex-centered:
nodes lie on the physical boundary, x_i = x0 + i*dx for i = 0..nx, so a grid
with nx intervals carries nx+1 nodes per direction.  Faces x_{i+1/2} are the
midpoints between adjacent nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_INTERVALS = 6


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


@dataclass(frozen=True)
class Grid:
    """Uniform 2D node grid covering [x0, x0+width] x [y0, y0+height].

    nx, ny count intervals; there are (nx+1)*(ny+1) nodes and the boundary
    nodes sit exactly on the rectangle edges.
    """

    nx: int
    ny: int
    width: float
    height: float
    x0: float = 0.0
    y0: float = 0.0

    @property
    def dx(self) -> float:
        return self.width / self.nx

    @property
    def dy(self) -> float:
        return self.height / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        """Node-array shape, indexed [i, j] with i along x and j along y."""
        return (self.nx + 1, self.ny + 1)

    def x_nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx + 1)

    def y_nodes(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny + 1)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays X, Y of shape (nx+1, ny+1)."""
        return np.meshgrid(self.x_nodes(), self.y_nodes(), indexing="ij")

    def nearest_node(self, x: float, y: float) -> tuple[int, int]:
        """Index pair of the node closest to (x, y), clipped into the grid."""
        i = int(round((x - self.x0) / self.dx))
        j = int(round((y - self.y0) / self.dy))
        return (min(max(i, 0), self.nx), min(max(j, 0), self.ny))


def make_grid(nx: int, ny: int, width: float, height: float,
              x0: float = 0.0, y0: float = 0.0) -> Grid:
    """Build a uniform grid; raises GridError below the minimum stencil support."""
    if nx < MIN_INTERVALS or ny < MIN_INTERVALS:
        raise GridError(
            f"grid needs at least {MIN_INTERVALS} intervals per direction, got {nx}x{ny}")
    if width <= 0.0 or height <= 0.0:
        raise GridError(f"grid extents must be positive, got width={width} height={height}")
    return Grid(nx=nx, ny=ny, width=float(width), height=float(height),
                x0=float(x0), y0=float(y0))


@dataclass
class ScalarField:
    """One real value per grid node, stored as values[i, j]."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def check_finite(self, label: str = "field") -> "ScalarField":
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError(f"{label} contains non-finite values")
        return self


@dataclass
class PhysicalParams:
    """Dimensionless control parameters of the double-diffusive cavity."""

    prandtl: float = 1.0
    lewis: float = 2.0
    rayleigh: float = 1e5
    buoyancy_ratio: float = 1.0
    aspect: float = 2.0

    def __post_init__(self):
        if self.prandtl <= 0.0:
            raise ValueError(f"prandtl must be > 0, got {self.prandtl}")
        if self.lewis <= 0.0:
            raise ValueError(f"lewis must be > 0, got {self.lewis}")
        if self.rayleigh < 0.0:
            raise ValueError(f"rayleigh must be >= 0, got {self.rayleigh}")
        if self.buoyancy_ratio < 0.0:
            raise ValueError(f"buoyancy_ratio must be >= 0, got {self.buoyancy_ratio}")
        if self.aspect <= 0.0:
            raise ValueError(f"aspect must be > 0, got {self.aspect}")


@dataclass
class ConservedState:
    """Evolved components (omega, T, C) plus the derived psi, u, v at one time."""

    omega: ScalarField
    temperature: ScalarField
    concentration: ScalarField
    psi: ScalarField
    u: ScalarField
    v: ScalarField
    time: float = 0.0

    def __post_init__(self):
        g = self.omega.grid
        for f in (self.temperature, self.concentration, self.psi, self.u, self.v):
            if f.grid != g:
                raise GridError("all state fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.omega.grid

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0) -> "ConservedState":
        return cls(*(ScalarField.zeros(grid) for _ in range(6)), time=time)

    def copy(self) -> "ConservedState":
        return ConservedState(self.omega.copy(), self.temperature.copy(),
                              self.concentration.copy(), self.psi.copy(),
                              self.u.copy(), self.v.copy(), self.time)

    def check_finite(self) -> "ConservedState":
        for name in ("omega", "temperature", "concentration", "psi", "u", "v"):
            getattr(self, name).check_finite(name)
        return self


def error_norms(numeric: ScalarField, exact: ScalarField) -> tuple[float, float]:
    """(L2, Linf) of the difference field.

    L2 is the node sum weighted by the cell area dx*dy (the 1D convention
    sqrt(dx * sum e_i^2) extended to 2D); Linf is the plain max-norm.
    """
    if numeric.grid != exact.grid:
        raise GridError("error_norms requires fields on the same grid")
    diff = numeric.values - exact.values
    g = numeric.grid
    l2 = math.sqrt(g.dx * g.dy * float(np.sum(diff * diff)))
    linf = float(np.max(np.abs(diff))) if diff.size else 0.0
    return l2, linf


def error_norms_1d(numeric: np.ndarray, exact: np.ndarray, dx: float) -> tuple[float, float]:
    """1D variant on raw sample vectors: L2 = sqrt(dx * sum e^2), Linf = max|e|."""
    diff = np.asarray(numeric, dtype=float) - np.asarray(exact, dtype=float)
    return math.sqrt(dx * float(np.sum(diff * diff))), float(np.max(np.abs(diff)))


def observed_order(err_coarse: float, h_coarse: float,
                   err_fine: float, h_fine: float) -> float:
    """log(e1/e2) / log(h1/h2) between two resolutions."""
    for name, v in (("err_coarse", err_coarse), ("h_coarse", h_coarse),
                    ("err_fine", err_fine), ("h_fine", h_fine)):
        if v <= 0.0:
            raise ValueError(f"observed_order needs positive inputs, {name}={v}")
    if h_coarse == h_fine:
        raise ValueError("observed_order needs distinct mesh sizes")
    return math.log(err_coarse / err_fine) / math.log(h_coarse / h_fine)
