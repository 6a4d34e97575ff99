"""Construct, certify, count and sample vertices of the tristochastic polytope."""

from .arrays import Cube, HalfArray, parse, serialize, validate_half_array, validate_tristochastic
from .certify import certify_half_vertex, certify_support_rank
from .construct import ConstructionError, ConstructionInfeasible, construct_vertex, replay

__version__ = "0.1.0"

__all__ = [
    "Cube", "HalfArray", "parse", "serialize", "validate_half_array", "validate_tristochastic",
    "certify_half_vertex", "certify_support_rank",
    "ConstructionError", "ConstructionInfeasible", "construct_vertex", "replay",
]
