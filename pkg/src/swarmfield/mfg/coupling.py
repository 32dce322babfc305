"""Running cost felt by a representative defender.

For the macroscopic cost ``D(t) * Q(t)`` with

    D(t) = (1 - alpha) * d_h(W2^2(nu_h, mu(t)))
    Q(t) = exp(-int_0^t d_att(W2^2(mu, m)))

the chain rule at a single instant gives the field

    F(t, x) = -D(t) * Q(t) * d_att'(W2^2(mu(t), m(t))) * phi_t(x)

where ``phi_t`` is the first variation of ``W2^2(mu(t), .)`` at ``m(t)``.
Because ``d_att' < 0`` the field is a positive multiple of ``phi_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..attrition import SurvivalTrace, attrition_rate, attrition_rate_derivative
from ..errors import InputError
from ..ot import DivergenceResult, SinkhornResult, sinkhorn_divergence
from .config import MfgConfig


def coupling_scale(config: MfgConfig, r2: float, r2_hvu: float, q: float) -> float:
    """Scalar multiplying ``phi`` in the running cost."""
    d = (1.0 - config.alpha) * attrition_rate(config.hvu, r2_hvu)
    return -d * q * attrition_rate_derivative(config.att, r2)


def coupling_field(
    k: int,
    m_flow: np.ndarray,
    mu_flow: np.ndarray,
    nu_h: np.ndarray,
    config: MfgConfig,
    history: SurvivalTrace,
    potential: np.ndarray | None = None,
) -> np.ndarray:
    """Running cost ``F(t_k, .)`` given the squared-distance history up to ``k``.

    ``history`` supplies ``W2^2(mu, m)``, ``W2^2(nu_h, mu)`` and ``Q`` at the
    sample instants; only entries ``0..k`` are read. ``potential`` reuses an
    already computed first variation at ``t_k``.
    """
    if k < 0 or k >= len(history.times):
        raise InputError(f"sample index {k} outside history of length {len(history.times)}")
    scale = coupling_scale(config, history.w2_def_att[k], history.w2_att_hvu[k], history.q[k])
    if scale == 0.0:
        return np.zeros(config.grid.shape)
    if potential is None:
        potential = sinkhorn_divergence(config.grid, mu_flow[k], m_flow[k], config.sinkhorn).potential
    return scale * potential


@dataclass
class CouplingAssembler:
    """Distance histories and running costs along a defender flow.

    Sinkhorn potentials are cached per sample and reused as warm starts for
    the next outer iteration, which is where most of the solve time goes.
    """

    config: MfgConfig
    mu_flow: np.ndarray
    nu_h: np.ndarray
    w2_hvu: np.ndarray = field(init=False)
    self_mu: list[SinkhornResult] = field(init=False)
    _warm: list[DivergenceResult | None] = field(init=False)
    sinkhorn_failures: int = 0

    def __post_init__(self):
        cfg = self.config
        self.w2_hvu = np.empty(cfg.nt)
        self.self_mu = []
        warm = None
        for k in range(cfg.nt):
            div = sinkhorn_divergence(cfg.grid, self.nu_h, self.mu_flow[k], cfg.sinkhorn, warm=warm)
            self.sinkhorn_failures += not div.converged
            self.w2_hvu[k] = div.value
            # div.self_m is OT(mu_k, mu_k), reused by every cross term at t_k
            self.self_mu.append(div.self_m)
            warm = div
        self._warm = [None] * cfg.nt

    def distances(self, m_flow: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """``W2^2(mu_k, m_k)`` and first variations for every sample."""
        cfg = self.config
        r2 = np.empty(cfg.nt)
        phis = []
        for k in range(cfg.nt):
            warm = self._warm[k] if self._warm[k] is not None else (self._warm[k - 1] if k else None)
            div = sinkhorn_divergence(
                cfg.grid, self.mu_flow[k], m_flow[k], cfg.sinkhorn, warm=warm, self_mu=self.self_mu[k]
            )
            self.sinkhorn_failures += not div.converged
            self._warm[k] = div
            r2[k] = div.value
            phis.append(div.potential)
        return r2, phis

    def assemble(self, m_flow: np.ndarray) -> tuple[SurvivalTrace, np.ndarray]:
        """Survival trace along ``m_flow`` and the running-cost flow it induces."""
        cfg = self.config
        r2, phis = self.distances(m_flow)
        trace = SurvivalTrace.from_distances(cfg.times, r2, self.w2_hvu, cfg.att, cfg.hvu)
        f_flow = np.stack(
            [
                coupling_field(k, m_flow, self.mu_flow, self.nu_h, cfg, trace, potential=phis[k])
                for k in range(cfg.nt)
            ]
        )
        return trace, f_flow
