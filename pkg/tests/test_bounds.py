from __future__ import annotations

import numpy as np
import pytest

from swarmfield.attrition import AttritionParams
from swarmfield.grid import make_grid
from swarmfield.mfg import GaussianSpec, MfgConfig, MfgSolution, fp_forward, picard_solve, verify_bounds


def frozen_quadratic_solution(boundary="periodic"):
    """Defenders pulled into the origin by a time-frozen value w = |x|^2 / 2."""
    g = make_grid((-5, 5, -5, 5), 40, 40, boundary)
    cfg = MfgConfig(grid=g, nt=21, T=0.4, m0=GaussianSpec((0.0, 0.0), 2.0))
    X, Y = g.mesh()
    w = np.broadcast_to(0.5 * (X**2 + Y**2), (cfg.nt, *g.shape)).copy()
    if boundary == "periodic":
        # keep w smooth across the seam
        w = np.broadcast_to(12.5 * (2 - np.cos(np.pi * X / 5) - np.cos(np.pi * Y / 5)) / np.pi**2 * 4,
                            (cfg.nt, *g.shape)).copy()
    m = fp_forward(w, cfg.initial_defenders(), cfg).flow
    return MfgSolution(cfg, m, m, w, None, [0.0], True)


def test_heat_flow_respects_initial_extremes():
    cfg = MfgConfig(grid=make_grid((-5, 5, -5, 5), 24, 24), nt=21, att=AttritionParams(0.0, 5.0))
    sol = picard_solve(cfg)
    rep = verify_bounds(sol)
    assert rep.K == 0.0 and rep.ok
    assert np.all(rep.max_m <= rep.max_m0) and np.all(rep.min_m >= rep.min_m0)


def test_envelope_holds_and_shrunk_envelope_is_caught():
    sol = frozen_quadratic_solution()
    rep = verify_bounds(sol)
    assert rep.K > 0 and rep.ok
    shrunk = verify_bounds(sol, k_override=rep.K / 2)
    assert shrunk.violation_count > 0
    assert shrunk.max_violation_ratio > 1.0


def test_drift_scaling_changes_the_reported_k():
    sol = frozen_quadratic_solution()
    rep = verify_bounds(sol)
    assert rep.K == pytest.approx(rep.K_w / (2 * sol.config.alpha))


def test_report_csv(tmp_path):
    rep = verify_bounds(frozen_quadratic_solution())
    rep.to_csv(tmp_path / "b.csv")
    header = (tmp_path / "b.csv").read_text().splitlines()[1]
    assert header == "t,min_m,max_m,lower_envelope,upper_envelope,violations"
