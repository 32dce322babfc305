"""A-posteriori check of the exponential density envelope.

For a Fokker-Planck flow ``m_t - eps * lap(m) - div(grad(u) m) = 0`` the
density obeys

    exp(-K t) * min m0  <=  m(t, x)  <=  exp(K t) * max m0,
    K = sup_t ||lap u||_inf,

where ``u`` is the drift potential. Here ``u = w / (2 alpha)`` with drift
scaling on and ``u = w`` otherwise; both Laplacian norms are reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import laplacian
from ..io import write_columns
from .picard import MfgSolution

DEFAULT_SLACK = 1.05


@dataclass
class BoundsReport:
    times: np.ndarray
    K: float  # sup-norm of lap(u) for the drift potential actually used
    K_w: float  # sup-norm of lap(w) itself
    min_m0: float
    max_m0: float
    min_m: np.ndarray
    max_m: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    violations: np.ndarray  # per-sample count of offending cells
    max_violation_ratio: float
    slack: float

    @property
    def violation_count(self) -> int:
        return int(self.violations.sum())

    @property
    def ok(self) -> bool:
        return self.violation_count == 0

    def rows(self):
        return zip(self.times, self.min_m, self.max_m, self.lower, self.upper, self.violations)

    def to_csv(self, path) -> None:
        write_columns(
            path,
            {
                "t": self.times,
                "min_m": self.min_m,
                "max_m": self.max_m,
                "lower_envelope": self.lower,
                "upper_envelope": self.upper,
                "violations": self.violations,
            },
        )


def laplacian_sup(solution: MfgSolution, factor: float = 1.0) -> float:
    grid = solution.config.grid
    return float(max(np.abs(laplacian(grid, factor * w)).max() for w in solution.w_flow))


def verify_bounds(
    solution: MfgSolution,
    slack: float = DEFAULT_SLACK,
    k_override: float | None = None,
) -> BoundsReport:
    """Compare every sample of ``m`` with the exponential envelope.

    ``slack`` widens both envelopes multiplicatively to absorb discretization
    error. ``k_override`` replaces the computed ``K``; shrinking it is a way
    to confirm the check actually bites.
    """
    cfg = solution.config
    t = cfg.times
    m = solution.m_flow
    K_w = laplacian_sup(solution)
    K = laplacian_sup(solution, cfg.drift_factor) if k_override is None else float(k_override)
    m0 = m[0]
    lo0, hi0 = float(m0.min()), float(m0.max())
    lower = np.exp(-K * t) * lo0
    upper = np.exp(K * t) * hi0
    min_m = m.min(axis=(1, 2))
    max_m = m.max(axis=(1, 2))
    lo_ok = m >= (lower / slack)[:, None, None]
    hi_ok = m <= (upper * slack)[:, None, None]
    violations = (~(lo_ok & hi_ok)).sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_hi = np.max(max_m / upper)
        ratio_lo = np.max(np.where(min_m > 0, lower / min_m, np.inf if lo0 > 0 else 0.0))
    return BoundsReport(
        times=t,
        K=K,
        K_w=K_w,
        min_m0=lo0,
        max_m0=hi0,
        min_m=min_m,
        max_m=max_m,
        lower=lower,
        upper=upper,
        violations=violations,
        max_violation_ratio=float(max(ratio_hi, ratio_lo)),
        slack=slack,
    )
