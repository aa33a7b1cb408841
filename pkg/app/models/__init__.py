"""
Parameter sets, protocol value objects and simulation schemas
"""

from .params import PARAM_SETS, PRODUCTION, TOY, Params, get_params
from .simulation import FaultSpec, SimConfig, Transcript

__all__ = [
    "PARAM_SETS",
    "PRODUCTION",
    "TOY",
    "Params",
    "get_params",
    "FaultSpec",
    "SimConfig",
    "Transcript",
]
