"""Backward Hamilton-Jacobi-Bellman solve.

In reversed time ``tau = T - t`` the equation

    -w_t - eps * lap(w) + |grad w|^2 / (4 alpha) = F,   w(T) = 0

becomes ``w_tau = eps * lap(w) - H(grad w) + F``. The Hamiltonian is
discretized with a Godunov flux on second-order ENO one-sided differences,
diffusion with Crank-Nicolson, and the two are combined in a Heun-type
IMEX step (second order in time). Substeps respect a CFL bound on the
Hamiltonian's characteristic speed ``|p| / (2 alpha)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft

from ..errors import SolverDiagnosticError
from ..grid import Grid, laplacian, pad


def _shift(W: np.ndarray, axis: int, k: int) -> np.ndarray:
    """Interior of a 2-ghost padded array displaced by ``k`` cells along ``axis``."""
    ny, nx = W.shape[0] - 4, W.shape[1] - 4
    if axis == 1:
        return W[2 : 2 + ny, 2 + k : 2 + k + nx]
    return W[2 + k : 2 + k + ny, 2 : 2 + nx]


def eno_derivatives(W: np.ndarray, h: float, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Backward- and forward-biased ENO2 first derivatives."""
    m2, m1, c, p1, p2 = (_shift(W, axis, k) for k in (-2, -1, 0, 1, 2))
    d2_m = (c - 2 * m1 + m2) / h**2
    d2_0 = (p1 - 2 * c + m1) / h**2
    d2_p = (p2 - 2 * p1 + c) / h**2
    minus = (c - m1) / h + 0.5 * h * np.where(np.abs(d2_m) <= np.abs(d2_0), d2_m, d2_0)
    plus = (p1 - c) / h - 0.5 * h * np.where(np.abs(d2_0) <= np.abs(d2_p), d2_0, d2_p)
    return minus, plus


def hamiltonian(grid: Grid, w: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """Godunov approximation of ``|grad w|^2 / (4 alpha)`` and the CFL rate.

    The rate is ``max(|p_x| / dx + |p_y| / dy) / (2 alpha)``.
    """
    W = pad(grid, w, 2)
    total = np.zeros(grid.shape)
    rate = np.zeros(grid.shape)
    for axis, h in ((1, grid.dx), (0, grid.dy)):
        pm, pp = eno_derivatives(W, h, axis)
        total += np.maximum(np.maximum(pm, 0.0) ** 2, np.minimum(pp, 0.0) ** 2)
        rate += np.maximum(np.abs(pm), np.abs(pp)) / h
    return total / (4.0 * alpha), float(rate.max()) / (2.0 * alpha)


@lru_cache(maxsize=8)
def _laplacian_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of the five-point Laplacian in its DCT-II / DFT basis."""
    if grid.periodic:
        kx = np.sin(np.pi * np.arange(grid.nx) / grid.nx) ** 2
        ky = np.sin(np.pi * np.arange(grid.ny) / grid.ny) ** 2
    else:
        kx = np.sin(np.pi * np.arange(grid.nx) / (2 * grid.nx)) ** 2
        ky = np.sin(np.pi * np.arange(grid.ny) / (2 * grid.ny)) ** 2
    return -4.0 * (ky[:, None] / grid.dy**2 + kx[None, :] / grid.dx**2)


def solve_helmholtz(grid: Grid, rhs: np.ndarray, a: float) -> np.ndarray:
    """Solve ``(I - a * lap) x = rhs`` exactly for the discrete Laplacian."""
    denom = 1.0 - a * _laplacian_symbol(grid)
    if grid.periodic:
        return np.real(fft.ifft2(fft.fft2(rhs) / denom))
    return fft.idctn(fft.dctn(rhs, type=2, norm="ortho") / denom, type=2, norm="ortho")


def hjb_backward(
    f_flow: np.ndarray,
    grid: Grid,
    times: np.ndarray,
    epsilon: float,
    alpha: float,
    cfl: float = 0.5,
    schedule: np.ndarray | None = None,
) -> np.ndarray:
    """Value function at the sample instants, integrated back from ``w(T) = 0``.

    ``f_flow`` holds the running cost at each sample; it is interpolated
    linearly in time between samples. Each sample interval is split into
    equal substeps; ``schedule`` (one int per interval, indexed forward in
    time) is a floor on their number and is raised in place to the counts
    actually used.
    """
    f_flow = np.asarray(f_flow, dtype=float)
    nt = len(times)
    if f_flow.shape != (nt, *grid.shape):
        raise SolverDiagnosticError(f"F flow shape {f_flow.shape} != {(nt, *grid.shape)}")
    w_flow = np.empty_like(f_flow)
    w = np.zeros(grid.shape)
    w_flow[-1] = w
    step = 0

    def explicit(w, f):
        h, rate = hamiltonian(grid, w, alpha)
        return f - h, rate

    for k in range(nt - 1, 0, -1):
        span = times[k] - times[k - 1]
        n_w, rate = explicit(w, f_flow[k])
        n_sub = max(1, int(np.ceil(span * rate / cfl)))
        if schedule is not None:
            n_sub = max(n_sub, int(schedule[k - 1]))
        start = w
        while True:
            dt = span / n_sub
            w, n_w = start, explicit(start, f_flow[k])[0]
            for s in range(n_sub):
                a = 0.5 * dt * epsilon
                diff = epsilon * laplacian(grid, w)
                w_star = solve_helmholtz(grid, w + dt * n_w + 0.5 * dt * diff, a)
                n_star, _ = explicit(w_star, _lerp(f_flow, k, span, (s + 1) * dt))
                w = solve_helmholtz(grid, w + 0.5 * dt * (n_w + n_star) + 0.5 * dt * diff, a)
                step += 1
                if not np.all(np.isfinite(w)):
                    raise SolverDiagnosticError(
                        f"value function blew up near t={times[k] - (s + 1) * dt:.4g}", step=step
                    )
                if s + 1 < n_sub:
                    n_w, rate = explicit(w, _lerp(f_flow, k, span, (s + 1) * dt))
                    if rate * dt > 2 * cfl:
                        break
            else:
                break
            # the characteristic speed grew inside the interval: refine and redo
            n_sub = max(n_sub + 1, int(np.ceil(span * rate / cfl)))
        if schedule is not None:
            schedule[k - 1] = n_sub
        w_flow[k - 1] = w
    return w_flow


def _lerp(f_flow: np.ndarray, k: int, span: float, tau: float) -> np.ndarray:
    """Running cost at reversed time ``tau`` past sample ``k`` (toward ``k - 1``)."""
    s = min(max(tau / span, 0.0), 1.0)
    return (1.0 - s) * f_flow[k] + s * f_flow[k - 1]
