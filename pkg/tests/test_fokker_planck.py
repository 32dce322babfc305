from __future__ import annotations

import numpy as np
import pytest

from swarmfield.grid import gaussian_density, integrate, make_grid, moments
from swarmfield.mfg import GaussianSpec, MfgConfig, attacker_flow, fp_forward
from swarmfield.mfg.fokker_planck import drift_from_value, homing_velocity, transport


def _masses(grid, flow):
    return np.array([integrate(grid, r) for r in flow])


def test_heat_flow_second_moment(grid60):
    cfg = MfgConfig(attacker_gain=0.0, mu0=GaussianSpec((0.0, 0.0), 0.85))
    res = attacker_flow(cfg)
    t = cfg.times
    m2 = np.array([moments(grid60, r)[1] for r in res.flow])
    growth = m2 - m2[0]
    assert growth[-1] == pytest.approx(2 * 2 * cfg.epsilon * t[-1], rel=0.05)
    assert np.all(np.abs(_masses(grid60, res.flow) - 1) < 1e-8)


def test_heat_flow_maximum_principle():
    cfg = MfgConfig(epsilon=0.05)
    res = fp_forward(None, cfg.initial_defenders(), cfg)
    mx = res.flow.max(axis=(1, 2))
    mn = res.flow.min(axis=(1, 2))
    assert np.all(np.diff(mx) <= 1e-15)
    assert np.all(np.diff(mn) >= -1e-30)


def _attacker_mean_error(n):
    cfg = MfgConfig(grid=make_grid((-5, 5, -5, 5), n, n))
    res = attacker_flow(cfg)
    c0, _ = moments(cfg.grid, res.flow[0])
    c, _ = moments(cfg.grid, res.flow[-1])
    ode = 1.0 + np.exp(-cfg.attacker_gain * cfg.T) * (c0 - 1.0)
    return np.linalg.norm(c - ode), np.linalg.norm(c - 1.0), res


def test_attackers_follow_the_mean_ode(grid60):
    err60, dist60, res = _attacker_mean_error(60)
    # the homing law collapses the attackers below grid scale, so the
    # discrete mean lags the exact one by a fraction of a cell
    assert err60 < 0.5 * grid60.dx
    assert dist60 < 0.2
    assert res.flow.min() >= 0 and res.clip_events == 0
    assert np.all(np.abs(_masses(grid60, res.flow) - 1) < 1e-8)


def test_attacker_mean_converges_under_refinement():
    err60, _, _ = _attacker_mean_error(60)
    err120, _, _ = _attacker_mean_error(120)
    assert err120 < 0.5 * err60


def test_frozen_quadratic_value_concentrates(grid60):
    cfg = MfgConfig(m0=GaussianSpec((0.5, -0.5), 1.0))
    X, Y = grid60.mesh()
    w = np.broadcast_to(0.5 * (X**2 + Y**2), (cfg.nt, *grid60.shape))
    res = fp_forward(w, cfg.initial_defenders(), cfg)
    c = np.array([moments(grid60, r)[0] for r in res.flow])
    m2 = np.array([np.sum(r * (X**2 + Y**2)) * grid60.cell_area for r in res.flow])
    assert np.all(np.diff(m2[:10]) < 0)
    assert np.all(np.diff(m2) < 1e-12)
    # the mean obeys dc/dt = -c / (2 alpha) until diffusion balances drift
    t = cfg.times
    k = t <= 0.5
    assert np.allclose(c[k, 0], 0.5 * np.exp(-5 * t[k]), atol=0.02)
    assert np.all(np.abs(_masses(grid60, res.flow) - 1) < 1e-8)
    assert res.clip_events == 0


def test_unscaled_drift_is_slower(grid60):
    X, Y = grid60.mesh()
    w = np.broadcast_to(0.5 * (X**2 + Y**2), (50, *grid60.shape))
    a = fp_forward(w, MfgConfig().initial_defenders(), MfgConfig())
    b = fp_forward(w, MfgConfig().initial_defenders(), MfgConfig(drift_scaling=False))
    ca = moments(grid60, a.flow[5])[0]
    cb = moments(grid60, b.flow[5])[0]
    assert np.linalg.norm(ca) < np.linalg.norm(cb)


def test_periodic_transport_conserves_mass_across_seam():
    g = make_grid((-5, 5, -5, 5), 40, 40, "periodic")
    rho0 = gaussian_density(g, (4.0, 0.0), 0.5)
    v = homing_velocity(g, (-4.0, 0.0), 0.8)
    res = transport(g, rho0, np.linspace(0, 5, 11), lambda k: v, 0.01)
    assert np.all(np.abs(_masses(g, res.flow) - 1) < 1e-12)
    assert res.flow.min() >= 0


def test_wall_faces_carry_no_flux(grid30):
    X, _ = grid30.mesh()
    v = drift_from_value(grid30, -3 * X, 1.0)  # pushes everything to the right wall
    rho0 = gaussian_density(grid30, (3.5, 0.0), 0.3)
    res = transport(grid30, rho0, np.linspace(0, 3, 7), lambda k: v, 0.001)
    assert np.all(np.abs(_masses(grid30, res.flow) - 1) < 1e-12)
    assert res.flow[-1][:, -1].sum() > res.flow[0][:, -1].sum()


def test_schedule_is_a_floor():
    cfg = MfgConfig(epsilon=0.05)
    sched = np.full(cfg.nt - 1, 7)
    res = fp_forward(None, cfg.initial_defenders(), cfg, sched)
    assert res.substeps == 7 * (cfg.nt - 1)
    assert np.all(sched == 7)
