"""necrosim: necrotic-core tumor growth with an obstacle-problem pressure.

Modules
-------
model       growth/consumption laws, parameters, assumption checks
elliptic    1-D Poisson, obstacle and nutrient solvers
simulator   front-tracking time stepper
analytic    closed-form radially symmetric profiles and radius ODE
travelwave  traveling waves with a necrotic tail
cli         config-driven command line front end
"""
from .model import (IN_VITRO, IN_VIVO, GeneralMonotone, IgnitionAffine, IgnitionConstant,
                    IgnitionGeneral, Linear, ModelParams, NumericsConfig, TwoLevel, validate)

__version__ = "0.1.0"

__all__ = [
    "IN_VITRO", "IN_VIVO", "GeneralMonotone", "IgnitionAffine", "IgnitionConstant",
    "IgnitionGeneral", "Linear", "ModelParams", "NumericsConfig", "TwoLevel", "validate",
]
