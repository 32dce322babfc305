"""Population-level forward-backward solver."""

from .bounds import BoundsReport, verify_bounds
from .config import GaussianSpec, MfgConfig, PicardParams, density
from .coupling import CouplingAssembler, coupling_field
from .fokker_planck import FlowResult, attacker_flow, fp_forward, transport
from .hjb import hjb_backward
from .picard import MfgSolution, picard_solve

__all__ = [
    "BoundsReport",
    "CouplingAssembler",
    "FlowResult",
    "GaussianSpec",
    "MfgConfig",
    "MfgSolution",
    "PicardParams",
    "attacker_flow",
    "coupling_field",
    "density",
    "fp_forward",
    "hjb_backward",
    "picard_solve",
    "transport",
    "verify_bounds",
]
