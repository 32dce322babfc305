from __future__ import annotations

import numpy as np
import pytest

from swarmfield.attrition import AttritionParams
from swarmfield.grid import make_grid
from swarmfield.mfg import GaussianSpec, MfgConfig, PicardParams, fp_forward, hjb_backward, picard_solve
from swarmfield.mfg.coupling import CouplingAssembler
from swarmfield.mfg.picard import flow_change

SMALL = make_grid((-5, 5, -5, 5), 24, 24)


def small_config(**kw):
    kw.setdefault("grid", SMALL)
    kw.setdefault("nt", 21)
    return MfgConfig(**kw)


@pytest.fixture(scope="module")
def solved():
    return picard_solve(small_config())


def test_decoupled_system_converges_at_once():
    cfg = small_config(att=AttritionParams(0.0, 5.0), hvu=AttritionParams(0.0, 5.0))
    sol = picard_solve(cfg)
    heat = fp_forward(None, cfg.initial_defenders(), cfg).flow
    assert sol.iterations == 1 and sol.converged
    assert np.abs(sol.w_flow).max() <= 1e-12
    assert np.abs(sol.m_flow - heat).max() <= 1e-10
    assert np.all(sol.trace.q == 1.0) and np.all(sol.trace.p == 1.0)


def test_solution_invariants(solved):
    assert solved.converged
    assert solved.residuals[-1] <= solved.config.picard.residual_tol
    assert solved.mass_error() < 1e-8
    assert solved.m_flow.min() >= 0 and solved.clip_events == 0
    assert solved.monotone
    tr = solved.trace
    assert np.all(np.diff(tr.q) <= 0) and np.all(np.diff(tr.p) <= 0)


def test_fixed_point_consistency(solved):
    cfg = solved.config
    asm = CouplingAssembler(cfg, solved.mu_flow, cfg.hvu_density())
    _, F = asm.assemble(solved.m_flow)
    # replay the map with the substep counts the solver settled on
    sched = solved.schedules
    w = hjb_backward(F, cfg.grid, cfg.times, cfg.epsilon, cfg.alpha, cfg.cfl, sched["hjb"].copy())
    m = fp_forward(w, cfg.initial_defenders(), cfg, sched["fp"].copy()).flow
    assert flow_change(cfg, m, solved.m_flow) <= 2 * cfg.picard.residual_tol


def test_mirror_symmetry():
    cfg = small_config(
        m0=GaussianSpec((-3.0, 0.0), 0.85),
        mu0=GaussianSpec((3.0, 0.0), 0.85),
        nu_h=(GaussianSpec((0.0, 0.0), 0.1),),
        attacker_target=(0.0, 0.0),
        picard=PicardParams(max_outer=8),
    )
    sol = picard_solve(cfg)
    assert np.abs(sol.m_flow - sol.m_flow[:, ::-1, :]).max() <= 1e-6


def test_stronger_weapon_helps(solved):
    weak = picard_solve(small_config(att=AttritionParams(2.0, 5.0)))
    assert solved.trace.p[-1] > weak.trace.p[-1]


def test_nonconvergence_is_reported():
    sol = picard_solve(small_config(picard=PicardParams(max_outer=2)))
    assert not sol.converged and len(sol.residuals) == 2
