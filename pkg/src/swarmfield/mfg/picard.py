"""Damped forward-backward fixed-point iteration for the coupled system."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..attrition import SurvivalTrace
from ..grid import integrate
from .config import MfgConfig
from .coupling import CouplingAssembler
from .fokker_planck import attacker_flow, fp_forward
from .hjb import hjb_backward

log = logging.getLogger(__name__)

# iterations allowed to be non-monotone before the residual must decrease
MONOTONE_AFTER = 3


@dataclass
class MfgSolution:
    """Converged (or best-effort) pair of flows plus diagnostics."""

    config: MfgConfig
    m_flow: np.ndarray
    mu_flow: np.ndarray
    w_flow: np.ndarray
    trace: SurvivalTrace
    residuals: list[float]
    converged: bool
    clip_events: int = 0
    sinkhorn_failures: int = 0
    substeps: dict[str, int] = field(default_factory=dict)
    # per-interval substep counts of the final HJB / FP sweeps
    schedules: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.config.times

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def monotone(self) -> bool:
        """Residuals nonincreasing once the first few iterations are past."""
        r = np.asarray(self.residuals[MONOTONE_AFTER - 1 :])
        return bool(np.all(np.diff(r) <= 1e-12 * max(r.max(initial=0.0), 1.0)))

    def mass_error(self) -> float:
        """Largest deviation from unit mass over both flows."""
        grid = self.config.grid
        masses = [integrate(grid, rho) for rho in (*self.m_flow, *self.mu_flow)]
        return float(np.max(np.abs(np.asarray(masses) - 1.0)))


def flow_change(config: MfgConfig, a: np.ndarray, b: np.ndarray) -> float:
    """Time-summed L1 distance between two density flows."""
    return float(np.abs(a - b).sum() * config.grid.cell_area)


def picard_solve(config: MfgConfig, callback=None) -> MfgSolution:
    """Solve the HJB / Fokker-Planck system by damped Picard iteration.

    The attacker flow is fixed up front. Each outer iteration evaluates the
    running cost along the current defender flow (so survival ``Q`` lags by
    one iterate), integrates the value function backward, pushes the
    defenders forward under the induced drift and relaxes toward the result
    with weight ``config.picard.damping``. The recorded residual is the
    time-summed L1 size of that relaxed update.

    ``callback(iteration, residual)`` is invoked after every iteration.
    """
    picard = config.picard
    theta = picard.damping
    mu = attacker_flow(config)
    heat = fp_forward(None, config.initial_defenders(), config)
    m_flow = heat.flow
    clips = mu.clip_events + heat.clip_events
    steps = {"attacker": mu.substeps, "defender": 0, "heat": heat.substeps}

    assembler = CouplingAssembler(config, mu.flow, config.hvu_density())
    residuals: list[float] = []
    w_flow = np.zeros_like(m_flow)
    converged = False
    for it in range(1, picard.max_outer + 1):
        if it <= MONOTONE_AFTER:
            # substep counts float freely while the iterates move a lot, then
            # only ever grow so the discrete map stops changing under us
            hjb_steps = np.zeros(config.nt - 1, dtype=int)
            fp_steps = np.zeros(config.nt - 1, dtype=int)
        _, f_flow = assembler.assemble(m_flow)
        w_flow = hjb_backward(
            f_flow, config.grid, config.times, config.epsilon, config.alpha, config.cfl, hjb_steps
        )
        fwd = fp_forward(w_flow, config.initial_defenders(), config, fp_steps)
        clips += fwd.clip_events
        steps["defender"] += fwd.substeps
        m_next = (1.0 - theta) * m_flow + theta * fwd.flow
        res = flow_change(config, m_next, m_flow)
        m_flow = m_next
        residuals.append(res)
        log.info("picard %d: residual %.3e", it, res)
        if callback is not None:
            callback(it, res)
        if res <= picard.residual_tol:
            converged = True
            break

    trace, _ = assembler.assemble(m_flow)
    return MfgSolution(
        config=config,
        m_flow=m_flow,
        mu_flow=mu.flow,
        w_flow=w_flow,
        trace=trace,
        residuals=residuals,
        converged=converged,
        clip_events=clips,
        sinkhorn_failures=assembler.sinkhorn_failures,
        substeps=steps,
        schedules={"hjb": hjb_steps, "fp": fp_steps},
    )
