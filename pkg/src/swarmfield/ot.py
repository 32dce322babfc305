"""Entropic optimal transport between grid densities.

Sinkhorn iterations run in the log domain on the squared-Euclidean cost
between cell centres (squared geodesic cost on periodic grids). The cost is
separable over the two axes, so every soft-min is two 1-D reductions.

The squared Wasserstein-2 distance is estimated everywhere by the debiased
Sinkhorn divergence::

    S(mu, m) = OT(mu, m) - OT(mu, mu) / 2 - OT(m, m) / 2

where ``OT`` is the entropic dual value ``<a, f> + <b, g>``. Its first
variation in ``m`` is ``g_{mu,m} - f_{m,m}``, which is what the mean-field
coupling needs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numba
import numpy as np
from scipy.special import logsumexp

from .errors import ConfigurationError, InputError
from .grid import Grid, gaussian_density, integrate, make_grid
from .io import write_table

DENSITY_FLOOR = 1e-12
# exp() of anything below this is treated as underflowed in the BLAS path
_UNDERFLOW = 1e-280


class SinkhornWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SinkhornParams:
    eps_ot: float = 0.1
    tol: float = 1e-6
    max_iter: int = 2000

    def __post_init__(self):
        if not self.eps_ot > 0:
            raise ConfigurationError(f"eps_ot must be > 0, got {self.eps_ot}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass
class SinkhornResult:
    """Dual potentials and convergence metadata.

    ``cost`` is the entropic dual value ``<a, f> + <b, g>``, which equals
    ``<plan, c> + eps * KL(plan | a x b)`` at convergence.
    """

    f: np.ndarray
    g: np.ndarray
    cost: float
    iterations: int
    converged: bool
    marginal_error: float


@dataclass
class DivergenceResult:
    value: float
    potential: np.ndarray
    cross: SinkhornResult
    self_mu: SinkhornResult
    self_m: SinkhornResult

    @property
    def converged(self) -> bool:
        return self.cross.converged and self.self_mu.converged and self.self_m.converged


# --------------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _lse_exact(H, ce, rows, cols, out):
    for k in range(rows.size):
        r = rows[k]
        j = cols[k]
        mx = -np.inf
        for i in range(H.shape[1]):
            v = H[r, i] - ce[i, j]
            if v > mx:
                mx = v
        s = 0.0
        for i in range(H.shape[1]):
            d = H[r, i] - ce[i, j] - mx
            if d > -37.0:
                s += np.exp(d)
        out[r, j] = mx + np.log(s)


def _lse_pass(H: np.ndarray, ce: np.ndarray, kern: np.ndarray) -> np.ndarray:
    """``out[j, r] = logsumexp_i(H[r, i] - ce[i, j])``.

    Row-max shifted BLAS product; entries whose sum underflows are redone
    exactly (those are the only ones the shift can get wrong).
    """
    hm = H.max(axis=1, keepdims=True)
    s = np.exp(H - hm) @ kern
    bad = s < _UNDERFLOW
    out = hm + np.log(np.where(bad, 1.0, s))
    if bad.any():
        rows, cols = np.nonzero(bad)
        _lse_exact(H, ce, rows, cols, out)
    return np.ascontiguousarray(out.T)


@dataclass(frozen=True)
class _Cost:
    cx: np.ndarray  # (nx, nx), already divided by eps
    cy: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    eps: float

    def softmin(self, h: np.ndarray) -> np.ndarray:
        """``-eps * logsumexp_j(h_j - c_ij / eps)`` over all cells, shape kept."""
        return -self.eps * _lse_pass(_lse_pass(h, self.cx, self.kx), self.cy, self.ky)


def _axis_cost(c: np.ndarray, length: float, periodic: bool) -> np.ndarray:
    d = np.abs(c[:, None] - c[None, :])
    if periodic:
        d = np.minimum(d, length - d)
    return d**2


@lru_cache(maxsize=16)
def _cost(grid: Grid, eps: float) -> _Cost:
    cx = _axis_cost(grid.xc, grid.lx, grid.periodic) / eps
    cy = _axis_cost(grid.yc, grid.ly, grid.periodic) / eps
    return _Cost(cx, cy, np.exp(-cx), np.exp(-cy), eps)


def cost_matrix(grid: Grid) -> np.ndarray:
    """Dense ``(N, N)`` ground cost over flattened cells (small grids only)."""
    cx = _axis_cost(grid.xc, grid.lx, grid.periodic)
    cy = _axis_cost(grid.yc, grid.ly, grid.periodic)
    return (cy[:, None, :, None] + cx[None, :, None, :]).reshape(grid.nx * grid.ny, -1)


def _dense_softmin(C: np.ndarray, eps: float, h: np.ndarray) -> np.ndarray:
    return -eps * logsumexp(h.ravel()[None, :] - C / eps, axis=1).reshape(h.shape)


# ------------------------------------------------------------------- sinkhorn


def _weights(grid: Grid, rho: np.ndarray, name: str) -> np.ndarray:
    rho = grid.check(rho, name)
    if np.any(~np.isfinite(rho)) or np.any(rho < 0):
        raise InputError(f"{name} must be finite and nonnegative")
    w = np.maximum(rho, DENSITY_FLOOR) * grid.cell_area
    return w / w.sum()


def sinkhorn(
    grid: Grid,
    mu: np.ndarray,
    m: np.ndarray,
    params: SinkhornParams | None = None,
    init: tuple[np.ndarray, np.ndarray] | None = None,
    dense: bool = False,
) -> SinkhornResult:
    """Log-domain Sinkhorn between densities ``mu`` and ``m`` on ``grid``.

    ``f`` lives on the ``mu`` side and ``g`` on the ``m`` side; both are
    defined on every cell (c-transform extension). ``init`` warm-starts from
    earlier potentials. ``dense=True`` uses the full cost matrix instead of
    the axis factorization, for cross-checking on small grids.
    """
    params = params or SinkhornParams()
    a = _weights(grid, mu, "mu")
    b = _weights(grid, m, "m")
    la, lb = np.log(a), np.log(b)
    eps = params.eps_ot
    if dense:
        C = cost_matrix(grid)
        softmin = lambda h: _dense_softmin(C, eps, h)  # noqa: E731
    else:
        softmin = _cost(grid, eps).softmin

    if init is None:
        f = np.zeros(grid.shape)
        g = softmin(la)
    else:
        f, g = (np.array(p, dtype=float) for p in init)

    err = np.inf
    it = 0
    for it in range(1, params.max_iter + 1):
        f_new = softmin(lb + g / eps)
        err = float(np.sum(a * np.abs(np.expm1((f - f_new) / eps))))
        f = f_new
        g = softmin(la + f / eps)
        if err <= params.tol:
            break
    converged = err <= params.tol
    cost = float(np.sum(a * f) + np.sum(b * g))
    return SinkhornResult(f, g, cost, it, converged, err)


def sinkhorn_self(
    grid: Grid,
    rho: np.ndarray,
    params: SinkhornParams | None = None,
    init: np.ndarray | None = None,
) -> SinkhornResult:
    """Symmetric problem ``OT(rho, rho)`` with averaged updates (f = g)."""
    params = params or SinkhornParams()
    a = _weights(grid, rho, "rho")
    la = np.log(a)
    eps = params.eps_ot
    softmin = _cost(grid, eps).softmin
    f = np.zeros(grid.shape) if init is None else np.array(init, dtype=float)
    err = np.inf
    it = 0
    for it in range(1, params.max_iter + 1):
        t = softmin(la + f / eps)
        err = float(np.sum(a * np.abs(np.expm1((f - t) / eps))))
        f = 0.5 * (f + t)
        if err <= params.tol:
            f = t
            break
    converged = err <= params.tol
    cost = float(2.0 * np.sum(a * f))
    return SinkhornResult(f, f, cost, it, converged, err)


def sinkhorn_divergence(
    grid: Grid,
    mu: np.ndarray,
    m: np.ndarray,
    params: SinkhornParams | None = None,
    warm: DivergenceResult | None = None,
    self_mu: SinkhornResult | None = None,
) -> DivergenceResult:
    """Debiased divergence together with its first variation in ``m``.

    ``self_mu`` reuses an already solved ``OT(mu, mu)``; ``warm`` seeds all
    three problems from a previous result.
    """
    params = params or SinkhornParams()
    cross = sinkhorn(
        grid, mu, m, params, init=None if warm is None else (warm.cross.f, warm.cross.g)
    )
    if self_mu is None:
        self_mu = sinkhorn_self(
            grid, mu, params, init=None if warm is None else warm.self_mu.f
        )
    self_m = sinkhorn_self(grid, m, params, init=None if warm is None else warm.self_m.f)
    value = cross.cost - 0.5 * self_mu.cost - 0.5 * self_m.cost
    phi = cross.g - self_m.f
    phi = phi - integrate(grid, phi * m) / integrate(grid, m)
    res = DivergenceResult(max(value, 0.0), phi, cross, self_mu, self_m)
    if not res.converged:
        warnings.warn(
            f"Sinkhorn did not reach tol={params.tol} within {params.max_iter} iterations "
            f"(errors {cross.marginal_error:.2e}, {self_mu.marginal_error:.2e}, "
            f"{self_m.marginal_error:.2e})",
            SinkhornWarning,
            stacklevel=2,
        )
    return res


def w2_squared(
    grid: Grid, mu: np.ndarray, m: np.ndarray, params: SinkhornParams | None = None
) -> float:
    """Squared W2 estimate via the debiased Sinkhorn divergence (>= 0)."""
    return sinkhorn_divergence(grid, mu, m, params).value


def first_variation_w2(
    grid: Grid, mu: np.ndarray, m: np.ndarray, params: SinkhornParams | None = None
) -> np.ndarray:
    """First variation of ``m -> W2^2(mu, m)``, centred so that ``int phi dm = 0``."""
    return sinkhorn_divergence(grid, mu, m, params).potential


# ------------------------------------------------------------ other distances


def gaussian_w2_closed_form(
    c1: Sequence[float], v1: float, c2: Sequence[float], v2: float, dim: int = 2
) -> float:
    """Bures formula for isotropic Gaussians ``N(c, v I)``."""
    if not (v1 > 0 and v2 > 0):
        raise ConfigurationError(f"variances must be positive, got {v1}, {v2}")
    diff = np.asarray(c1, float) - np.asarray(c2, float)
    return float(diff @ diff + dim * (np.sqrt(v1) - np.sqrt(v2)) ** 2)


def kl_divergence(grid: Grid, p: np.ndarray, q: np.ndarray) -> float:
    """``sum p log(p / q) dx dy`` with ``q`` floored and ``0 log 0 = 0``."""
    p = grid.check(p, "p")
    q = np.maximum(grid.check(q, "q"), DENSITY_FLOOR)
    pos = p > 0
    return float(max(np.sum(p[pos] * np.log(p[pos] / q[pos])) * grid.cell_area, 0.0))


# -------------------------------------------------------------- sweep harness

TRANSLATION = dict(fixed=((0.0, 0.0), 0.85), start=(2.0, 2.0), end=(0.0, 0.0), variance=0.85)
VARIANCE = dict(center=(0.0, 0.0), fixed=((2.0, 2.0), 1.5), v_min=0.1, v_max=10.0)

Distance = Callable[[Grid, np.ndarray, np.ndarray], float]


@dataclass
class SweepTable:
    mode: str
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows])

    def to_csv(self, path: str | Path) -> Path:
        return write_table(path, self.columns, self.rows)


def distance_sweep(
    mode: str,
    grid: Grid | None = None,
    n: int = 100,
    values: Sequence[float] | None = None,
    params: SinkhornParams | None = None,
    extra: Mapping[str, Distance] | None = None,
) -> SweepTable:
    """Tabulate W2 and KL along one of the two comparison sweeps.

    ``translation``: a Gaussian (variance 0.85) slides from (2, 2) to (0, 0)
    against a fixed one at the origin; ``sweep_value`` is the fraction of the
    way still to go (1 -> 0). ``variance``: a Gaussian at the origin has its
    variance swept over [0.1, 10] against a fixed N((2, 2), 1.5); the sweep
    value is the variance. KL is ``KL(moving | fixed)``. ``extra`` adds more
    distance columns.
    """
    grid = grid or make_grid((-5, 5, -5, 5), 60, 60)
    params = params or SinkhornParams()
    extra = dict(extra or {})
    if mode == "translation":
        vals = np.linspace(1.0, 0.0, n) if values is None else np.asarray(values, float)
        if np.any(vals < 0) or np.any(vals > 1):
            raise ConfigurationError("translation sweep values are fractions in [0, 1]")
        (fc, fv) = TRANSLATION["fixed"]
        fixed = gaussian_density(grid, fc, fv)
        start, end = np.array(TRANSLATION["start"]), np.array(TRANSLATION["end"])
        movers = [gaussian_density(grid, end + s * (start - end), TRANSLATION["variance"]) for s in vals]
    elif mode == "variance":
        if values is None:
            vals = np.linspace(VARIANCE["v_min"], VARIANCE["v_max"], n)
        else:
            vals = np.asarray(values, float)
        if np.any(vals <= 0):
            raise ConfigurationError("variance sweep values must be positive")
        (fc, fv) = VARIANCE["fixed"]
        fixed = gaussian_density(grid, fc, fv)
        movers = [gaussian_density(grid, VARIANCE["center"], v) for v in vals]
    else:
        raise ConfigurationError(f"unknown sweep mode {mode!r} (translation | variance)")
    if vals.size < 1:
        raise ConfigurationError("sweep needs at least one sample")

    table = SweepTable(mode, ["sweep_value", "w2", "kl", *extra])
    warm = None
    for v, mover in zip(vals, movers):
        div = sinkhorn_divergence(grid, mover, fixed, params, warm=warm)
        warm = div
        row = [float(v), float(np.sqrt(div.value)), kl_divergence(grid, mover, fixed)]
        row += [float(fn(grid, mover, fixed)) for fn in extra.values()]
        table.rows.append(row)
    return table
