"""Linear almost Poisson structures on D*: brackets, Jacobiator, Hamiltonian fields."""

from .bracket import (
    DualLike,
    DualPoint,
    ScalarOnDual,
    bracket,
    bracket_of,
    coordinate_bracket,
    coordinate_function,
    coordinate_jacobiator,
    hamiltonian_vf,
    hamiltonian_vf_matrix,
    jacobiator,
    lambda_matrix,
    momentum_names,
)
from .subspaces import LagrangianReport, kernel_inclusion_check, lagrangian_subspace_check, tangent_image

__all__ = [
    "DualLike",
    "DualPoint",
    "LagrangianReport",
    "ScalarOnDual",
    "bracket",
    "bracket_of",
    "coordinate_bracket",
    "coordinate_function",
    "coordinate_jacobiator",
    "hamiltonian_vf",
    "hamiltonian_vf_matrix",
    "jacobiator",
    "kernel_inclusion_check",
    "lagrangian_subspace_check",
    "lambda_matrix",
    "momentum_names",
    "tangent_image",
]
