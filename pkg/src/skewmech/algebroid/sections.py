"""Sections of the dual bundle D* (1-forms in the frame coframe)."""

import logging
from typing import Callable, Dict, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..errors import EvaluationError, InputError
from ..expr import BinaryOp, Expression, Number, free_variables, partial, second_partial
from ..numerics import central_jacobian
from .structure import PointLike, SkewAlgebroid

logger = logging.getLogger(__name__)


class DualSection(Protocol):
    """Anything that yields 1-form components and their base derivatives."""

    algebroid: SkewAlgebroid

    def components_at(self, q: PointLike) -> np.ndarray:
        """Components alpha_gamma(q), shape (n,)."""

    def jacobian_at(self, q: PointLike) -> np.ndarray:
        """Derivatives d alpha_gamma / d q^i, shape (n, m)."""


class Section1Form:
    """Section of D* given by n expressions in base coordinates and parameters.

    Free family constants (e.g. the C0, C1, C2 of a Hamilton-Jacobi family) are bound on
    the section itself, on top of the algebroid's parameters.
    """

    def __init__(
        self,
        algebroid: SkewAlgebroid,
        components: Sequence[Expression],
        constants: Optional[Mapping[str, float]] = None,
        name: str = "",
    ):
        """Initialize the section.

        Args:
            algebroid: Owning algebroid
            components: n expressions alpha_1..alpha_n
            constants: Values for free family constants
            name: Section name
        """
        if len(components) != algebroid.n:
            msg = f"section '{name}' has {len(components)} components, algebroid rank is {algebroid.n}"
            raise InputError(msg)
        self.algebroid = algebroid
        self.components: Tuple[Expression, ...] = tuple(components)
        self.constants: Dict[str, float] = dict(constants or {})
        self.name = name
        allowed = set(algebroid.coordinates) | set(algebroid.parameters) | set(self.constants)
        for index, component in enumerate(self.components):
            unknown = free_variables(component) - allowed
            if unknown:
                msg = f"section '{name}' component {index + 1} uses unknown names {sorted(unknown)}"
                raise InputError(msg)

    def binding(self, q: PointLike) -> Dict[str, float]:
        binding = self.algebroid.binding(q)
        binding.update(self.constants)
        return binding

    def components_at(self, q: PointLike) -> np.ndarray:
        binding = self.binding(q)
        values = np.zeros(len(self.components))
        for index, component in enumerate(self.components):
            try:
                values[index] = component.evaluate(binding)
            except EvaluationError as e:
                msg = f"section '{self.name}' component {index + 1}: {e}"
                raise type(e)(msg) from e
        return values

    def jacobian_at(self, q: PointLike) -> np.ndarray:
        binding = self.binding(q)
        coordinates = self.algebroid.coordinates
        return np.array([[partial(component, c, binding) for c in coordinates] for component in self.components])

    def with_constants(self, **constants: float) -> "Section1Form":
        """Copy with some family constants replaced."""
        merged = dict(self.constants)
        merged.update(constants)
        return Section1Form(self.algebroid, self.components, merged, self.name)

    def scaled(self, index: int, factor: float) -> "Section1Form":
        """Copy with component ``index`` (0-based) multiplied by ``factor``."""
        components = list(self.components)
        components[index] = BinaryOp("*", components[index], Number(float(factor)))
        return Section1Form(self.algebroid, components, self.constants, f"{self.name}*")

    def shifted(self, index: int, term: Expression) -> "Section1Form":
        """Copy with ``term`` added to component ``index`` (0-based)."""
        components = list(self.components)
        components[index] = BinaryOp("+", components[index], term)
        return Section1Form(self.algebroid, components, self.constants, f"{self.name}+")


def constant_section(algebroid: SkewAlgebroid, values: Sequence[float], name: str = "constant") -> Section1Form:
    """Section with constant frame components, e.g. K1 X^1 + K2 X^2."""
    return Section1Form(algebroid, [Number(float(v)) for v in values], name=name)


class ExactSection:
    """The exact section d^D f of a base function f."""

    def __init__(self, algebroid: SkewAlgebroid, function: Expression):
        """Initialize the section.

        Args:
            algebroid: Owning algebroid
            function: Base function f
        """
        self.algebroid = algebroid
        self.function = function

    def gradient_at(self, q: PointLike) -> np.ndarray:
        binding = self.algebroid.binding(q)
        return np.array([partial(self.function, c, binding) for c in self.algebroid.coordinates])

    def hessian_at(self, q: PointLike) -> np.ndarray:
        binding = self.algebroid.binding(q)
        names = self.algebroid.coordinates
        size = len(names)
        hessian = np.zeros((size, size))
        for i in range(size):
            for j in range(i, size):
                hessian[i, j] = hessian[j, i] = second_partial(self.function, names[i], names[j], binding)
        return hessian

    def components_at(self, q: PointLike) -> np.ndarray:
        return self.algebroid.anchor_at(q) @ self.gradient_at(q)

    def jacobian_at(self, q: PointLike) -> np.ndarray:
        # d_j (rho^i_gamma d_i f) = (d_j rho^i_gamma) d_i f + rho^i_gamma d_i d_j f
        anchor_derivative = self.algebroid.anchor_jacobian(q)
        return np.einsum("gij,i->gj", anchor_derivative, self.gradient_at(q)) + self.algebroid.anchor_at(
            q
        ) @ self.hessian_at(q)


class NumericSection:
    """Section given by a callable, differentiated by central differences."""

    def __init__(self, algebroid: SkewAlgebroid, function: Callable[[np.ndarray], np.ndarray], name: str = ""):
        """Initialize the section.

        Args:
            algebroid: Owning algebroid
            function: Map from base point to the n components
            name: Section name
        """
        self.algebroid = algebroid
        self.function = function
        self.name = name

    def components_at(self, q: PointLike) -> np.ndarray:
        return np.asarray(self.function(self.algebroid.point(q)), dtype=float)

    def jacobian_at(self, q: PointLike) -> np.ndarray:
        return central_jacobian(self.function, self.algebroid.point(q))
