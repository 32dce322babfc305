"""Forward Fokker-Planck transport in flux form.

Solves

    rho_t + div(v rho) - eps * lap(rho) = 0

with upwind advective fluxes built from minmod-limited linear
reconstructions (MUSCL) and central diffusive fluxes on cell faces, stepped
with the two-stage strong-stability-preserving Runge-Kutta method. The
substep keeps every cell's outflow coefficient below ``cfl``. A limited
face value never exceeds 1.5 times its cell value, so with ``cfl <= 0.5``
each Euler stage is a nonnegative combination of neighbouring values and
so is their average: mass is conserved to round-off and densities never go
negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverDiagnosticError
from ..grid import FaceField, Grid, gradient, pad
from .config import MfgConfig


@dataclass
class FlowResult:
    """Density samples plus integrator bookkeeping."""

    flow: np.ndarray  # (nt, ny, nx)
    substeps: int
    clip_events: int


def _outflow_rate(grid: Grid, v: FaceField, eps: float) -> float:
    out_x = np.maximum(v.x[:, 1:], 0.0) - np.minimum(v.x[:, :-1], 0.0)
    out_y = np.maximum(v.y[1:, :], 0.0) - np.minimum(v.y[:-1, :], 0.0)
    rate = out_x / grid.dx + out_y / grid.dy + 2.0 * eps * (1 / grid.dx**2 + 1 / grid.dy**2)
    return float(rate.max())


def _boundary_faces(grid: Grid, v: FaceField) -> FaceField:
    """Zero the normal velocity on walls (no-flux).

    On periodic grids the first and last face columns are the same face; a
    field that differs across the seam (the linear homing law does) gets the
    average of the two so the flux leaving one side enters the other.
    """
    vx, vy = v.x.copy(), v.y.copy()
    if grid.periodic:
        vx[:, 0] = vx[:, -1] = 0.5 * (vx[:, 0] + vx[:, -1])
        vy[0, :] = vy[-1, :] = 0.5 * (vy[0, :] + vy[-1, :])
    else:
        vx[:, 0] = vx[:, -1] = 0.0
        vy[0, :] = vy[-1, :] = 0.0
    return FaceField(vx, vy)


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _face_states(r: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Limited values on either side of every face along ``axis``.

    ``r`` carries two ghost layers; the returned arrays have one entry per
    face: the reconstruction from the lower cell and from the upper cell.
    """
    if axis == 0:
        lo, hi = _face_states(r.T, 1)
        return lo.T, hi.T
    r = r[2:-2, :]
    slope = _minmod(r[:, 1:-1] - r[:, :-2], r[:, 2:] - r[:, 1:-1])  # cells -1 .. n
    mid = r[:, 1:-1]
    return (mid + 0.5 * slope)[:, :-1], (mid - 0.5 * slope)[:, 1:]


def _rhs(grid: Grid, rho: np.ndarray, v: FaceField, eps: float) -> np.ndarray:
    r = pad(grid, rho, 2)
    c = r[1:-1, 1:-1]
    left, right = c[1:-1, :-1], c[1:-1, 1:]
    down, up = c[:-1, 1:-1], c[1:, 1:-1]
    wl, el = _face_states(r, 1)
    sl, nl = _face_states(r, 0)
    fx = np.maximum(v.x, 0.0) * wl + np.minimum(v.x, 0.0) * el - eps * (right - left) / grid.dx
    fy = np.maximum(v.y, 0.0) * sl + np.minimum(v.y, 0.0) * nl - eps * (up - down) / grid.dy
    if not grid.periodic:
        fx[:, 0] = fx[:, -1] = 0.0
        fy[0, :] = fy[-1, :] = 0.0
    return -((fx[:, 1:] - fx[:, :-1]) / grid.dx + (fy[1:, :] - fy[:-1, :]) / grid.dy)


def _step(grid: Grid, rho: np.ndarray, v0: FaceField, v1: FaceField, eps: float, dt: float) -> np.ndarray:
    stage = rho + dt * _rhs(grid, rho, v0, eps)
    return 0.5 * (rho + stage + dt * _rhs(grid, stage, v1, eps))


def transport(
    grid: Grid,
    rho0: np.ndarray,
    times: np.ndarray,
    velocity,
    eps: float,
    cfl: float = 0.5,
    schedule: np.ndarray | None = None,
) -> FlowResult:
    """Integrate the Fokker-Planck equation and sample at ``times``.

    ``velocity(k)`` returns the face velocity at sample ``k``; between samples
    it is interpolated linearly in time. ``schedule`` (one int per interval)
    is a floor on the substep counts and is raised in place to the counts
    actually used.
    """
    flow = np.empty((len(times), *grid.shape))
    rho = grid.check(rho0, "rho0").copy()
    flow[0] = rho
    total_steps = clips = 0
    v_next = _boundary_faces(grid, velocity(0))
    for k in range(len(times) - 1):
        v_prev, v_next = v_next, _boundary_faces(grid, velocity(k + 1))
        span = times[k + 1] - times[k]
        rate = max(_outflow_rate(grid, v_prev, eps), _outflow_rate(grid, v_next, eps))
        n_sub = max(1, int(np.ceil(span * rate / cfl)))
        if schedule is not None:
            n_sub = schedule[k] = max(n_sub, int(schedule[k]))
        dt = span / n_sub
        def at(theta):
            return FaceField(
                (1 - theta) * v_prev.x + theta * v_next.x,
                (1 - theta) * v_prev.y + theta * v_next.y,
            )

        for s in range(n_sub):
            rho = _step(grid, rho, at(s / n_sub), at((s + 1) / n_sub), eps, dt)
            if rho.min() < 0.0:
                clips += 1
                rho = np.maximum(rho, 0.0)
        total_steps += n_sub
        if not np.all(np.isfinite(rho)):
            raise SolverDiagnosticError(
                f"non-finite density after sample {k + 1} (t={times[k + 1]:.4g})", step=k + 1
            )
        flow[k + 1] = rho
    return FlowResult(flow, total_steps, clips)


def homing_velocity(grid: Grid, target, gain: float) -> FaceField:
    """Face samples of ``gain * (target - x)``."""
    vx = gain * (target[0] - grid.xf)[None, :] * np.ones((grid.ny, 1))
    vy = gain * (target[1] - grid.yf)[:, None] * np.ones((1, grid.nx))
    return FaceField(vx, vy)


def drift_from_value(grid: Grid, w: np.ndarray, factor: float) -> FaceField:
    """Defender velocity ``-factor * grad w`` on faces."""
    gw = gradient(grid, w)
    return FaceField(-factor * gw.x, -factor * gw.y)


def attacker_flow(config: MfgConfig) -> FlowResult:
    """Attacker density under the homing drift toward ``attacker_target``."""
    grid = config.grid
    v = homing_velocity(grid, config.attacker_target, config.attacker_gain)
    return transport(
        grid, config.initial_attackers(), config.times, lambda k: v, config.epsilon, config.cfl
    )


def fp_forward(
    w_flow: np.ndarray | None,
    m0: np.ndarray,
    config: MfgConfig,
    schedule: np.ndarray | None = None,
) -> FlowResult:
    """Defender density driven by the value function.

    Velocity is ``-grad w / (2 alpha)`` with ``drift_scaling`` on, ``-grad w``
    otherwise. ``w_flow=None`` gives the drift-free heat flow.
    """
    grid = config.grid
    if w_flow is None:
        zero = FaceField(np.zeros((grid.ny, grid.nx + 1)), np.zeros((grid.ny + 1, grid.nx)))
        velocity = lambda k: zero  # noqa: E731
    else:
        w_flow = np.asarray(w_flow, dtype=float)
        if w_flow.shape != (config.nt, *grid.shape):
            raise SolverDiagnosticError(
                f"w_flow has shape {w_flow.shape}, expected {(config.nt, *grid.shape)}"
            )
        velocity = lambda k: drift_from_value(grid, w_flow[k], config.drift_factor)  # noqa: E731
    return transport(grid, m0, config.times, velocity, config.epsilon, config.cfl, schedule)
