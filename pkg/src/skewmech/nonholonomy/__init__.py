"""Iterated Lie brackets of anchor fields, rank growth and orbit sampling."""

from .analysis import (
    COMPLETELY_NONHOLONOMIC,
    RANK_DEFICIENT,
    NonholonomyReport,
    NonholonomyRow,
    bracket_closure_rank,
    verdict,
)
from .fields import AnchorField, BracketField, ExpressionField, VectorField, lie_bracket
from .orbits import OrbitConstancy, constancy_on_orbit, sample_orbit

__all__ = [
    "COMPLETELY_NONHOLONOMIC",
    "RANK_DEFICIENT",
    "AnchorField",
    "BracketField",
    "ExpressionField",
    "NonholonomyReport",
    "NonholonomyRow",
    "OrbitConstancy",
    "VectorField",
    "bracket_closure_rank",
    "constancy_on_orbit",
    "lie_bracket",
    "sample_orbit",
    "verdict",
]
