"""Uniform cell-centred 2-D grid, finite-volume stencils and field helpers.

Fields are plain ``numpy`` arrays of shape ``(ny, nx)``: row index is ``y``,
column index is ``x``. Densities are probability densities (integrate to one
against ``dx * dy``). Vector fields live on cell faces (MAC layout) so that
``divergence(gradient(f))`` reproduces the compact five-point Laplacian and
fluxes conserve mass exactly.

Boundary handling is a property of the grid: ``"neumann"`` mirrors the cell
next to the wall (zero normal flux), ``"periodic"`` wraps around.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DegenerateDensityError, InputError

BOUNDARIES = ("neumann", "periodic")


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    boundary: str = "neumann"

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def lx(self) -> float:
        return self.x_max - self.x_min

    @property
    def ly(self) -> float:
        return self.y_max - self.y_min

    @property
    def xc(self) -> np.ndarray:
        """Cell-centre x coordinates, length ``nx``."""
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def xf(self) -> np.ndarray:
        """x coordinates of the ``nx + 1`` vertical faces."""
        return self.x_min + np.arange(self.nx + 1) * self.dx

    @property
    def yf(self) -> np.ndarray:
        return self.y_min + np.arange(self.ny + 1) * self.dy

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.xc, self.yc)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def contains(self, point: Sequence[float]) -> bool:
        x, y = point
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def with_boundary(self, boundary: str) -> "Grid":
        return make_grid((self.x_min, self.x_max, self.y_min, self.y_max), self.nx, self.ny, boundary)

    def check(self, f: np.ndarray, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise InputError(f"{name} has shape {f.shape}, grid expects {self.shape}")
        return f


class FaceField(NamedTuple):
    """Vector field on cell faces.

    ``x`` holds the x-component on vertical faces, shape ``(ny, nx + 1)``;
    ``y`` holds the y-component on horizontal faces, shape ``(ny + 1, nx)``.
    """

    x: np.ndarray
    y: np.ndarray


def make_grid(
    bounds: Sequence[float], nx: int, ny: int, boundary: str = "neumann"
) -> Grid:
    """Build a grid over ``[x_min, x_max] x [y_min, y_max]`` with ``nx * ny`` cells."""
    if len(bounds) != 4:
        raise ConfigurationError(f"bounds must be (x_min, x_max, y_min, y_max), got {bounds!r}")
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if not (np.isfinite([x_min, x_max, y_min, y_max]).all()):
        raise ConfigurationError("grid bounds must be finite")
    if not x_min < x_max or not y_min < y_max:
        raise ConfigurationError(f"degenerate bounds {bounds!r}")
    if int(nx) != nx or int(ny) != ny or nx < 4 or ny < 4:
        raise ConfigurationError(f"need integer cell counts >= 4, got nx={nx}, ny={ny}")
    if boundary not in BOUNDARIES:
        raise ConfigurationError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return Grid(x_min, x_max, y_min, y_max, int(nx), int(ny), boundary)


def pad(grid: Grid, f: np.ndarray, width: int = 1) -> np.ndarray:
    """Add ``width`` ghost layers: mirror (Neumann) or wrap (periodic)."""
    mode = "wrap" if grid.periodic else "symmetric"
    return np.pad(f, width, mode=mode)


def gradient(grid: Grid, f: np.ndarray) -> FaceField:
    """Face-centred gradient (second order at the faces).

    Wall faces carry zero normal derivative under Neumann boundaries.
    """
    g = pad(grid, grid.check(f), 1)
    gx = (g[1:-1, 1:] - g[1:-1, :-1]) / grid.dx
    gy = (g[1:, 1:-1] - g[:-1, 1:-1]) / grid.dy
    return FaceField(gx, gy)


def divergence(grid: Grid, v: FaceField) -> np.ndarray:
    """Cell-centred divergence of a face field (flux form)."""
    return (v.x[:, 1:] - v.x[:, :-1]) / grid.dx + (v.y[1:, :] - v.y[:-1, :]) / grid.dy


def laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Compact five-point Laplacian, ``divergence(gradient(f))``."""
    return divergence(grid, gradient(grid, f))


def cell_gradient(grid: Grid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient at cell centres (averaged face gradients)."""
    v = gradient(grid, f)
    return 0.5 * (v.x[:, 1:] + v.x[:, :-1]), 0.5 * (v.y[1:, :] + v.y[:-1, :])


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Midpoint quadrature ``sum(f) * dx * dy`` with a fixed summation order."""
    return float(np.sum(grid.check(f)) * grid.cell_area)


def normalize(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Clamp negative round-off to zero and rescale to unit mass."""
    f = np.maximum(grid.check(f, "density"), 0.0)
    total = integrate(grid, f)
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateDensityError(f"cannot normalize a density with total mass {total}")
    return f / total


def gaussian_density(
    grid: Grid, center: Sequence[float], variance: float
) -> np.ndarray:
    """Isotropic Gaussian sampled at cell centres, renormalized on the grid."""
    if not variance > 0:
        raise ConfigurationError(f"variance must be positive, got {variance}")
    if not grid.contains(center):
        raise ConfigurationError(f"center {tuple(center)} lies outside the domain")
    X, Y = grid.mesh()
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    return normalize(grid, np.exp(-r2 / (2.0 * variance)))


def gaussian_mixture(
    grid: Grid,
    components: Sequence[tuple[Sequence[float], float]],
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Weighted sum of :func:`gaussian_density` components, renormalized."""
    if not components:
        raise ConfigurationError("mixture needs at least one component")
    if weights is None:
        weights = [1.0] * len(components)
    if len(weights) != len(components) or min(weights) < 0:
        raise ConfigurationError("mixture weights must be nonnegative, one per component")
    rho = sum(w * gaussian_density(grid, c, v) for w, (c, v) in zip(weights, components))
    return normalize(grid, rho)


def point_mass(grid: Grid, point: Sequence[float]) -> np.ndarray:
    """Unit mass at ``point`` spread bilinearly over the nearest cell centres.

    Cloud-in-cell deposition keeps the first moment exact, so squared transport
    distances between deposited points differ from Euclidean ones by at most
    ``(dx**2 + dy**2) / 4``.
    """
    if not grid.contains(point):
        raise ConfigurationError(f"point {tuple(point)} lies outside the domain")
    rho = np.zeros(grid.shape)
    fx = (point[0] - grid.x_min) / grid.dx - 0.5
    fy = (point[1] - grid.y_min) / grid.dy - 0.5
    i0, j0 = int(np.floor(fx)), int(np.floor(fy))
    tx, ty = fx - i0, fy - j0
    for di, wx in ((0, 1.0 - tx), (1, tx)):
        for dj, wy in ((0, 1.0 - ty), (1, ty)):
            i, j = i0 + di, j0 + dj
            if grid.periodic:
                i, j = i % grid.nx, j % grid.ny
            else:
                i, j = min(max(i, 0), grid.nx - 1), min(max(j, 0), grid.ny - 1)
            rho[j, i] += wx * wy
    return rho / grid.cell_area


def moments(grid: Grid, rho: np.ndarray) -> tuple[np.ndarray, float]:
    """Centre of mass and second moment about it (sum over both axes)."""
    X, Y = grid.mesh()
    w = grid.check(rho) * grid.cell_area
    mass = w.sum()
    cx, cy = (w * X).sum() / mass, (w * Y).sum() / mass
    m2 = (w * ((X - cx) ** 2 + (Y - cy) ** 2)).sum() / mass
    return np.array([cx, cy]), float(m2)
