"""CLI interface for skewmech.

This package provides the ``skewmech`` command: simulations, Hamilton-Jacobi checks,
nonholonomy analysis, morphism checks and model listings.
"""

from .main import SkewMechCLI, main

__all__ = [
    "SkewMechCLI",
    "main",
]
