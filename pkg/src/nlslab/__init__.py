"""Blow-up criteria, data synthesis and solvers for 1-D NLS with an oscillating
nonlinear coefficient, on the whole line and on the half line."""

from .criteria import BlowupVerdict, check_halfline, check_line
from .field import AnalyticProfile, Component, SampledField
from .functionals import BlowupParameters, assemble
from .oscillator import OscillatingCoefficient
from .scaling import ScalingParams, synthesize
from .weights import HalflineWeight, LineWeight, make_weight

__version__ = "0.1.0"

__all__ = [
    "AnalyticProfile", "BlowupParameters", "BlowupVerdict", "Component", "HalflineWeight",
    "LineWeight", "OscillatingCoefficient", "SampledField", "ScalingParams", "assemble",
    "check_halfline", "check_line", "make_weight", "synthesize",
]
