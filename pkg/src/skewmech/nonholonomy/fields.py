"""Vector fields on the base chart and their Lie brackets."""

from abc import ABC, abstractmethod
from typing import Mapping, Optional, Sequence

import numpy as np

from ..algebroid import PointLike, SkewAlgebroid, as_array
from ..expr import Expression
from ..numerics import FIRST_DERIVATIVE_STEP, NESTED_DERIVATIVE_STEP, central_jacobian


class VectorField(ABC):
    """Vector field on the base, evaluated numerically.

    ``depth`` is 0 for generators and k for fields produced at bracket depth k.
    """

    label: str
    depth: int

    @abstractmethod
    def __call__(self, q: np.ndarray) -> np.ndarray:
        """Components at q, shape (m,)."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label})"


class AnchorField(VectorField):
    """Anchor image rho(X_alpha) of a frame section."""

    def __init__(self, algebroid: SkewAlgebroid, alpha: int):
        self.algebroid = algebroid
        self.alpha = alpha
        self.label = algebroid.frame[alpha]
        self.depth = 0

    def __call__(self, q: np.ndarray) -> np.ndarray:
        return self.algebroid.anchor_at(q)[self.alpha]


class ExpressionField(VectorField):
    """Vector field given by m expressions in the base coordinates."""

    def __init__(
        self,
        coordinates: Sequence[str],
        components: Sequence[Expression],
        parameters: Optional[Mapping[str, float]] = None,
        label: str = "V",
    ):
        self.coordinates = tuple(coordinates)
        self.components = tuple(components)
        self.parameters = dict(parameters or {})
        self.label = label
        self.depth = 0

    def __call__(self, q: np.ndarray) -> np.ndarray:
        binding = dict(self.parameters)
        binding.update(zip(self.coordinates, as_array(q).tolist()))
        return np.array([e.evaluate(binding) for e in self.components])


def _jacobian_step(field: VectorField) -> float:
    return FIRST_DERIVATIVE_STEP if field.depth == 0 else NESTED_DERIVATIVE_STEP


def lie_bracket(v: VectorField, w: VectorField, q: PointLike) -> np.ndarray:
    """``[V, W]^i = V^j d_j W^i - W^j d_j V^i`` with central-difference Jacobians.

    Fields that are themselves brackets are differentiated with the larger nested step.
    """
    q = as_array(q)
    jacobian_w = central_jacobian(w, q, _jacobian_step(w))
    jacobian_v = central_jacobian(v, q, _jacobian_step(v))
    return jacobian_w @ v(q) - jacobian_v @ w(q)


class BracketField(VectorField):
    """Closure computing the bracket of two parent fields on demand."""

    def __init__(self, left: VectorField, right: VectorField):
        self.left = left
        self.right = right
        self.label = f"[{left.label},{right.label}]"
        self.depth = max(left.depth, right.depth) + 1

    def __call__(self, q: np.ndarray) -> np.ndarray:
        return lie_bracket(self.left, self.right, q)
