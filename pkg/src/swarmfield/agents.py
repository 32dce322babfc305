"""Finite-population engagement simulator.

Attackers ``s_i`` and defenders ``x_k`` move under given velocity laws.
Each attacker survives defender ``k`` with probability

    Q_ik(t) = exp(-int_0^t d_att(|s_i - x_k|^2))

and the protected unit survives with

    P(t) = exp(-int_0^t sum_i d_h(|s_i - s_hvu|^2) Q_i),   Q_i = prod_k Q_ik.

Used as a small-scale check on the population model: with one agent on
each side it should agree with the transport-distance pipeline evaluated on
point masses.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .attrition import AttritionParams, survival_q
from .errors import ConfigurationError
from .grid import Grid, make_grid, point_mass
from .io import write_columns, write_table
from .ot import SinkhornParams, sinkhorn_divergence

# (t, positions (n, 2)) -> velocities (n, 2)
VelocityLaw = Callable[[float, np.ndarray], np.ndarray]


def homing(target, gain: float) -> VelocityLaw:
    """``gain * (target - p)`` for every agent."""
    target = np.asarray(target, dtype=float)
    return lambda t, p: gain * (target - p)


def constant_velocity(v) -> VelocityLaw:
    """Fixed per-agent velocities; ``v`` has shape (2,) or (n, 2)."""
    v = np.asarray(v, dtype=float)
    return lambda t, p: np.broadcast_to(v, p.shape)


def stationary() -> VelocityLaw:
    return lambda t, p: np.zeros_like(p)


@dataclass(frozen=True)
class AgentScenario:
    s0: np.ndarray  # attackers (n, 2)
    x0: np.ndarray  # defenders (m, 2)
    s_hvu: tuple[float, float]
    att: AttritionParams
    hvu: AttritionParams
    attacker_drift: VelocityLaw = field(default_factory=stationary)
    defender_control: VelocityLaw = field(default_factory=stationary)
    dt: float = 0.01
    T: float = 10.0
    noise: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        s0 = np.atleast_2d(np.asarray(self.s0, dtype=float))
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        for name, arr in (("s0", s0), ("x0", x0)):
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 1:
                raise ConfigurationError(f"{name} must hold at least one 2-D position, got shape {arr.shape}")
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "s_hvu", tuple(float(c) for c in self.s_hvu))
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be > 0, got {self.T}")
        if not self.noise >= 0:
            raise ConfigurationError(f"noise must be >= 0, got {self.noise}")

    @property
    def n_attackers(self) -> int:
        return self.s0.shape[0]

    @property
    def m_defenders(self) -> int:
        return self.x0.shape[0]

    @property
    def times(self) -> np.ndarray:
        n = max(1, int(round(self.T / self.dt)))
        return np.linspace(0.0, self.T, n + 1)


@dataclass
class AgentTrace:
    times: np.ndarray
    s: np.ndarray  # (nt, n, 2)
    x: np.ndarray  # (nt, m, 2)
    q_pair: np.ndarray  # (nt, n, m)
    q: np.ndarray  # (nt, n)
    p: np.ndarray  # (nt,)

    def write(self, directory: str | Path, prefix: str = "agents") -> list[Path]:
        """Positions in long format plus ``Q_i`` and ``P`` companion tables."""
        directory = Path(directory)
        rows = []
        for k, t in enumerate(self.times):
            rows += [(t, "att", i, *self.s[k, i]) for i in range(self.s.shape[1])]
            rows += [(t, "def", j, *self.x[k, j]) for j in range(self.x.shape[1])]
        pos = write_table(directory / f"{prefix}_positions.csv", ["t", "kind", "id", "x", "y"], rows)
        qcols = {"t": self.times} | {f"Q_{i}": self.q[:, i] for i in range(self.q.shape[1])}
        qf = write_columns(directory / f"{prefix}_Q.csv", qcols)
        pf = write_columns(directory / f"{prefix}_P.csv", {"t": self.times, "P": self.p})
        return [pos, qf, pf]


def _integrate_paths(scn: AgentScenario, times: np.ndarray):
    rng = np.random.default_rng(scn.seed)
    s = np.empty((len(times), *scn.s0.shape))
    x = np.empty((len(times), *scn.x0.shape))
    s[0], x[0] = scn.s0, scn.x0
    for k in range(len(times) - 1):
        t, h = times[k], times[k + 1] - times[k]
        s[k + 1] = s[k] + h * scn.attacker_drift(t, s[k])
        x[k + 1] = x[k] + h * scn.defender_control(t, x[k])
        if scn.noise > 0:
            s[k + 1] += scn.noise * np.sqrt(h) * rng.standard_normal(s[k].shape)
            x[k + 1] += scn.noise * np.sqrt(h) * rng.standard_normal(x[k].shape)
    return s, x


def simulate_agents(scn: AgentScenario) -> AgentTrace:
    """Euler (Euler-Maruyama when ``noise > 0``) paths and survival curves."""
    times = scn.times
    s, x = _integrate_paths(scn, times)
    r2 = ((s[:, :, None, :] - x[:, None, :, :]) ** 2).sum(-1)
    log_q_pair = -cumulative_trapezoid(scn.att.rate(r2), times, axis=0, initial=0.0)
    # products as sums of logs keep Q_i exact to round-off even when tiny
    q = np.exp(log_q_pair.sum(axis=2))
    r2_hvu = ((s - np.asarray(scn.s_hvu)) ** 2).sum(-1)
    p = np.exp(-cumulative_trapezoid((scn.hvu.rate(r2_hvu) * q).sum(axis=1), times, initial=0.0))
    return AgentTrace(times, s, x, np.exp(log_q_pair), q, p)


@dataclass
class DiracReport:
    times: np.ndarray
    r2_agent: np.ndarray
    r2_population: np.ndarray
    q_agent: np.ndarray
    q_population: np.ndarray

    @property
    def relative_deviation(self) -> np.ndarray:
        return np.abs(self.q_population - self.q_agent) / self.q_agent

    @property
    def max_relative_deviation(self) -> float:
        return float(self.relative_deviation.max())

    def to_csv(self, path: str | Path) -> Path:
        return write_columns(
            path,
            {
                "t": self.times,
                "r2_agent": self.r2_agent,
                "r2_population": self.r2_population,
                "Q_agent": self.q_agent,
                "Q_population": self.q_population,
                "rel_dev": self.relative_deviation,
            },
        )


def dirac_consistency_check(
    params: AttritionParams,
    scn: AgentScenario,
    grid: Grid | None = None,
    sinkhorn: SinkhornParams | None = None,
) -> DiracReport:
    """Agent-wise ``Q`` against the population pipeline on point masses.

    ``scn`` must hold one attacker and one defender moving deterministically.
    Their positions at each step are deposited on ``grid`` (default: the
    60 x 60 grid on [-5, 5]^2) and the squared distance between the two
    deposits feeds the same survival quadrature the population model uses.
    """
    if scn.n_attackers != 1 or scn.m_defenders != 1:
        raise ConfigurationError("Dirac check needs exactly one attacker and one defender")
    if scn.noise != 0:
        raise ConfigurationError("Dirac check needs deterministic trajectories (noise = 0)")
    grid = grid or make_grid((-5.0, 5.0, -5.0, 5.0), 60, 60)
    agent = simulate_agents(replace(scn, att=params))
    r2_pop = np.empty(len(agent.times))
    warm = None
    for k in range(len(agent.times)):
        a = point_mass(grid, agent.s[k, 0])
        d = point_mass(grid, agent.x[k, 0])
        warm = sinkhorn_divergence(grid, a, d, sinkhorn, warm=warm)
        r2_pop[k] = warm.value
    r2_agent = ((agent.s[:, 0] - agent.x[:, 0]) ** 2).sum(-1)
    q_pop = survival_q(params.rate(r2_pop), agent.times)
    return DiracReport(agent.times, r2_agent, r2_pop, agent.q[:, 0], q_pop)


DIRAC_PRESETS: dict[str, dict] = {
    "stationary": dict(s0=[(0.0, 0.0)], x0=[(2.0, 0.0)]),
    "coincident": dict(s0=[(1.0, 1.0)], x0=[(1.0, 1.0)]),
    "diverging": dict(
        s0=[(-0.5, 0.0)],
        x0=[(0.5, 0.0)],
        attacker_drift=constant_velocity((-0.3, 0.0)),
        defender_control=constant_velocity((0.3, 0.0)),
    ),
}


def dirac_scenario(name: str, lam: float = 1.0, sigma: float = 5.0, T: float = 5.0, dt: float = 0.1):
    """Single-pair scenario used by the consistency check."""
    if name not in DIRAC_PRESETS:
        raise ConfigurationError(f"unknown pair preset {name!r}; choose from {sorted(DIRAC_PRESETS)}")
    params = AttritionParams(lam, sigma)
    scn = AgentScenario(
        s_hvu=(0.0, 0.0), att=params, hvu=AttritionParams(0.0, 1.0), dt=dt, T=T, **DIRAC_PRESETS[name]
    )
    return params, scn
