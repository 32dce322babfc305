from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..attrition import AttritionParams
from ..errors import ConfigurationError
from ..grid import Grid, gaussian_mixture, make_grid
from ..ot import SinkhornParams


@dataclass(frozen=True)
class GaussianSpec:
    center: tuple[float, float]
    variance: float
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise ConfigurationError(f"center must be a 2-D point, got {self.center}")
        if not self.variance > 0:
            raise ConfigurationError(f"variance must be > 0, got {self.variance}")
        if not self.weight >= 0:
            raise ConfigurationError(f"weight must be >= 0, got {self.weight}")


def density(grid: Grid, specs: GaussianSpec | tuple[GaussianSpec, ...]) -> np.ndarray:
    """Unit-mass density of one Gaussian or a weighted mixture."""
    if isinstance(specs, GaussianSpec):
        specs = (specs,)
    return gaussian_mixture(
        grid, [(s.center, s.variance) for s in specs], [s.weight for s in specs]
    )


@dataclass(frozen=True)
class PicardParams:
    damping: float = 0.5
    max_outer: int = 100
    residual_tol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ConfigurationError(f"damping must lie in (0, 1], got {self.damping}")
        if int(self.max_outer) != self.max_outer or self.max_outer < 1:
            raise ConfigurationError(f"max_outer must be a positive integer, got {self.max_outer}")
        if not self.residual_tol > 0:
            raise ConfigurationError(f"residual_tol must be > 0, got {self.residual_tol}")


def _default_grid() -> Grid:
    return make_grid((-5.0, 5.0, -5.0, 5.0), 60, 60)


@dataclass(frozen=True)
class MfgConfig:
    """Everything one forward-backward solve needs.

    Defaults reproduce the first weapon-strength scenario: defenders at
    (-3, -3), attackers homing from (-4, 4) to the HVU at (1, 1).
    """

    grid: Grid = field(default_factory=_default_grid)
    T: float = 10.0
    nt: int = 50
    epsilon: float = 0.001
    alpha: float = 0.1
    att: AttritionParams = AttritionParams(14.0, 5.0)
    hvu: AttritionParams = AttritionParams(1.0, 5.0)
    m0: GaussianSpec = GaussianSpec((-3.0, -3.0), 0.85)
    mu0: GaussianSpec = GaussianSpec((-4.0, 4.0), 0.85)
    nu_h: tuple[GaussianSpec, ...] = (GaussianSpec((1.0, 1.0), 0.1),)
    attacker_target: tuple[float, float] = (1.0, 1.0)
    attacker_gain: float = 0.4
    sinkhorn: SinkhornParams = SinkhornParams()
    picard: PicardParams = PicardParams()
    drift_scaling: bool = True
    cfl: float = 0.5

    def __post_init__(self):
        if isinstance(self.nu_h, GaussianSpec):
            object.__setattr__(self, "nu_h", (self.nu_h,))
        object.__setattr__(self, "attacker_target", tuple(float(c) for c in self.attacker_target))
        if not self.T > 0:
            raise ConfigurationError(f"T must be > 0, got {self.T}")
        if int(self.nt) != self.nt or self.nt < 2:
            raise ConfigurationError(f"nt must be an integer >= 2, got {self.nt}")
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.attacker_gain >= 0:
            raise ConfigurationError(f"attacker gain must be >= 0, got {self.attacker_gain}")
        if not 0 < self.cfl <= 1:
            raise ConfigurationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.nu_h:
            raise ConfigurationError("nu_h needs at least one component")
        for name, spec in (("m0", self.m0), ("mu0", self.mu0)):
            if not self.grid.contains(spec.center):
                raise ConfigurationError(f"{name} center {spec.center} lies outside the domain")
        if not self.grid.contains(self.attacker_target):
            raise ConfigurationError(f"attacker target {self.attacker_target} lies outside the domain")

    @property
    def boundary(self) -> str:
        return self.grid.boundary

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)

    @property
    def drift_factor(self) -> float:
        """Multiplier turning ``-grad w`` into the defender velocity."""
        return 1.0 / (2.0 * self.alpha) if self.drift_scaling else 1.0

    def initial_defenders(self) -> np.ndarray:
        return density(self.grid, self.m0)

    def initial_attackers(self) -> np.ndarray:
        return density(self.grid, self.mu0)

    def hvu_density(self) -> np.ndarray:
        return density(self.grid, self.nu_h)
