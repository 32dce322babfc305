"""Attrition-rate functions and survival probabilities.

All attrition functions take the *squared* distance between shooter and
target (Euclidean for agents, squared Wasserstein-2 for populations)::

    rate(r2) = lam * exp(-r2 / sigma)

Survival of attackers against defenders and of the HVU against surviving
attackers are exponentials of trapezoidal time integrals::

    Q(t) = exp(-int_0^t d_att)        P(t) = exp(-int_0^t d_h * Q)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, InputError
from .io import write_columns


@dataclass(frozen=True)
class AttritionParams:
    """Exponential attrition law: peak rate ``lam`` (1/time), scale ``sigma`` (length^2).

    ``lam = 0`` is allowed and switches the weapon off.
    """

    lam: float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ConfigurationError(f"attrition lambda must be >= 0, got {self.lam}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigurationError(f"attrition sigma must be > 0, got {self.sigma}")

    def rate(self, r2):
        return attrition_rate(self, r2)

    def derivative(self, r2):
        return attrition_rate_derivative(self, r2)


def _check_r2(r2):
    r2 = np.asarray(r2, dtype=float)
    if np.any(r2 < 0) or np.any(np.isnan(r2)):
        raise InputError("squared distance must be nonnegative")
    return r2


def attrition_rate(params: AttritionParams, r2):
    """``lam * exp(-r2 / sigma)``; scalar in, scalar out."""
    r2 = _check_r2(r2)
    out = params.lam * np.exp(-r2 / params.sigma)
    return float(out) if out.ndim == 0 else out


def attrition_rate_derivative(params: AttritionParams, r2):
    """Derivative of :func:`attrition_rate` with respect to the squared distance."""
    r2 = _check_r2(r2)
    out = -(params.lam / params.sigma) * np.exp(-r2 / params.sigma)
    return float(out) if out.ndim == 0 else out


def _check_times(times, *series):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise InputError("times must be a non-empty 1-D sequence")
    if times[0] != 0.0:
        raise InputError(f"times must start at 0, got {times[0]}")
    if np.any(np.diff(times) <= 0):
        raise InputError("times must be strictly increasing")
    out = []
    for s in series:
        s = np.asarray(s, dtype=float)
        if s.shape != times.shape:
            raise InputError(f"series of length {s.size} does not match {times.size} times")
        out.append(s)
    return times, out


def survival_q(d_att, times) -> np.ndarray:
    """Attacker survival ``exp(-cumtrapz(d_att))`` at each sample instant."""
    times, (d_att,) = _check_times(times, d_att)
    if np.any(d_att < 0):
        raise InputError("attrition rates must be nonnegative")
    return np.exp(-cumulative_trapezoid(d_att, times, initial=0.0))


def survival_p(d_h, q, times) -> np.ndarray:
    """HVU survival ``exp(-cumtrapz(d_h * Q))``."""
    times, (d_h, q) = _check_times(times, d_h, q)
    if np.any(d_h < 0):
        raise InputError("attrition rates must be nonnegative")
    return np.exp(-cumulative_trapezoid(d_h * q, times, initial=0.0))


@dataclass(frozen=True)
class SurvivalTrace:
    times: np.ndarray
    w2_def_att: np.ndarray
    w2_att_hvu: np.ndarray
    d_att: np.ndarray
    d_h: np.ndarray
    q: np.ndarray
    p: np.ndarray

    @classmethod
    def from_distances(
        cls,
        times,
        w2_def_att,
        w2_att_hvu,
        att: AttritionParams,
        hvu: AttritionParams,
    ) -> "SurvivalTrace":
        """Evaluate rates and survival curves from squared-distance histories."""
        w2_def_att = np.asarray(w2_def_att, dtype=float)
        w2_att_hvu = np.asarray(w2_att_hvu, dtype=float)
        d_att = np.atleast_1d(attrition_rate(att, w2_def_att))
        d_h = np.atleast_1d(attrition_rate(hvu, w2_att_hvu))
        q = survival_q(d_att, times)
        p = survival_p(d_h, q, times)
        return cls(np.asarray(times, float), w2_def_att, w2_att_hvu, d_att, d_h, q, p)

    @property
    def objective(self) -> float:
        """Defender loss ``1 - P(T)``."""
        return float(1.0 - self.p[-1])

    def to_csv(self, path: str | Path) -> Path:
        return write_columns(
            path,
            {
                "t": self.times,
                "w2_def_att_sq": self.w2_def_att,
                "w2_att_hvu_sq": self.w2_att_hvu,
                "d_att": self.d_att,
                "d_h": self.d_h,
                "Q": self.q,
                "P": self.p,
            },
        )
