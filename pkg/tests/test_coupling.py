from __future__ import annotations

import numpy as np
import pytest

from swarmfield.attrition import AttritionParams, SurvivalTrace
from swarmfield.errors import InputError
from swarmfield.grid import integrate, make_grid
from swarmfield.mfg import GaussianSpec, MfgConfig, attacker_flow, coupling_field, fp_forward
from swarmfield.mfg.coupling import CouplingAssembler, coupling_scale


@pytest.fixture(scope="module")
def setup():
    cfg = MfgConfig(grid=make_grid((-5, 5, -5, 5), 30, 30), nt=6, T=2.0)
    mu = attacker_flow(cfg).flow
    m = fp_forward(None, cfg.initial_defenders(), cfg).flow
    return cfg, mu, m


def _history(cfg, r2, r2h):
    return SurvivalTrace.from_distances(cfg.times, r2, r2h, cfg.att, cfg.hvu)


def test_scale_is_positive_and_matches_formula():
    cfg = MfgConfig()
    s = coupling_scale(cfg, 4.0, 2.0, 0.5)
    d = 0.9 * 1.0 * np.exp(-2.0 / 5.0)
    assert s == pytest.approx(d * 0.5 * 14.0 / 5.0 * np.exp(-4.0 / 5.0))


def test_zero_weapon_gives_zero_field(setup):
    cfg, mu, m = setup
    cfg0 = MfgConfig(grid=cfg.grid, nt=cfg.nt, T=cfg.T, att=AttritionParams(0.0, 5.0))
    hist = _history(cfg0, np.full(cfg.nt, 3.0), np.full(cfg.nt, 3.0))
    F = coupling_field(2, m, mu, cfg0.hvu_density(), cfg0, hist)
    assert np.all(F == 0.0)


def test_coincident_populations_give_flat_field(setup):
    cfg, mu, m = setup
    hist = _history(cfg, np.zeros(cfg.nt), np.full(cfg.nt, 3.0))
    same = coupling_field(1, mu, mu, cfg.hvu_density(), cfg, hist)
    apart = coupling_field(1, m, mu, cfg.hvu_density(), cfg, hist)
    # potentials are only pinned down where there is mass, so weight by it
    size = lambda F: integrate(cfg.grid, np.abs(F) * mu[1])
    assert size(same) < 1e-6 * size(apart)


def test_field_is_lowest_toward_the_attackers(setup):
    cfg, mu, m = setup
    hist = _history(cfg, np.full(cfg.nt, 10.0), np.full(cfg.nt, 3.0))
    F = coupling_field(0, m, mu, cfg.hvu_density(), cfg, hist)
    # attackers start north-west of the defenders
    j, i = np.unravel_index(np.argmin(F), F.shape)
    X, Y = cfg.grid.mesh()
    attacker_c = np.array([-4.0, 4.0])
    defender_c = np.array([-3.0, -3.0])
    p = np.array([X[j, i], Y[j, i]])
    assert np.dot(p - defender_c, attacker_c - defender_c) > 0


def test_index_outside_history(setup):
    cfg, mu, m = setup
    hist = _history(cfg, np.full(cfg.nt, 1.0), np.full(cfg.nt, 1.0))
    with pytest.raises(InputError):
        coupling_field(cfg.nt, m, mu, cfg.hvu_density(), cfg, hist)


def test_assembler_matches_direct_fields(setup):
    cfg, mu, m = setup
    asm = CouplingAssembler(cfg, mu, cfg.hvu_density())
    trace, F = asm.assemble(m)
    assert F.shape == (cfg.nt, *cfg.grid.shape)
    direct = coupling_field(3, m, mu, cfg.hvu_density(), cfg, trace)
    weight = m[3] + mu[3]
    err = integrate(cfg.grid, np.abs(direct - F[3]) * weight)
    assert err < 1e-6 * integrate(cfg.grid, np.abs(F[3]) * weight)
    # a second pass warm-starts and reproduces the same distances
    trace2, _ = asm.assemble(m)
    assert np.allclose(trace.w2_def_att, trace2.w2_def_att, rtol=1e-6)


def test_symmetric_inputs_give_symmetric_field():
    g = make_grid((-5, 5, -5, 5), 30, 30)
    cfg = MfgConfig(
        grid=g, nt=4, T=1.0,
        m0=GaussianSpec((-3.0, 0.0), 0.85), mu0=GaussianSpec((3.0, 0.0), 0.85),
        nu_h=(GaussianSpec((0.0, 0.0), 0.1),), attacker_target=(0.0, 0.0),
    )
    mu = attacker_flow(cfg).flow
    m = fp_forward(None, cfg.initial_defenders(), cfg).flow
    _, F = CouplingAssembler(cfg, mu, cfg.hvu_density()).assemble(m)
    assert np.abs(F - F[:, ::-1, :]).max() < 1e-8 * np.abs(F).max()
