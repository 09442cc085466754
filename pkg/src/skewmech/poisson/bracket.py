"""Linear almost Poisson bracket on D* induced by a skew-symmetric algebroid.

Coordinates on D* are ``(q^1..q^m, p_1..p_n)``; momenta are named ``p1..pn`` in expressions.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Union

import numpy as np

from ..algebroid import CoordinateBracket, SkewAlgebroid, as_array
from ..errors import EvaluationError, InputError
from ..expr import Expression, Variable, free_variables, parse, partial
from ..numerics import NESTED_DERIVATIVE_STEP, central_gradient, central_jacobian

logger = logging.getLogger(__name__)


def momentum_names(algebroid: SkewAlgebroid) -> List[str]:
    """Expression names of the fiber coordinates of D*."""
    return [f"p{k + 1}" for k in range(algebroid.n)]


@dataclass(frozen=True)
class DualPoint:
    """Point of D*: base coordinates q and fiber momenta p."""

    q: np.ndarray
    p: np.ndarray

    @classmethod
    def from_array(cls, x: Union[Sequence[float], np.ndarray], m: int) -> "DualPoint":
        values = np.array(x, dtype=float).reshape(-1)
        return cls(values[:m].copy(), values[m:].copy())

    @classmethod
    def of(cls, q: Sequence[float], p: Sequence[float]) -> "DualPoint":
        return cls(as_array(q), np.array(p, dtype=float).reshape(-1))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


DualLike = Union[DualPoint, Sequence[float], np.ndarray]


def _dual(algebroid: SkewAlgebroid, x: DualLike) -> DualPoint:
    point = x if isinstance(x, DualPoint) else DualPoint.from_array(x, algebroid.m)
    if point.q.size != algebroid.m or point.p.size != algebroid.n:
        msg = f"{algebroid.name}: dual point needs {algebroid.m} + {algebroid.n} values"
        raise InputError(msg)
    return point


class ScalarOnDual:
    """Function h(q, p) on D* written as an expression."""

    def __init__(self, algebroid: SkewAlgebroid, expression: Union[Expression, str], name: str = ""):
        """Initialize the function.

        Args:
            algebroid: Algebroid whose dual bundle carries the function
            expression: Expression (or source text) in coordinates, momenta and parameters
            name: Label for reports
        """
        self.algebroid = algebroid
        self.expression = parse(expression) if isinstance(expression, str) else expression
        self.name = name
        self.momenta = momentum_names(algebroid)
        allowed = set(algebroid.coordinates) | set(algebroid.parameters) | set(self.momenta)
        unknown = free_variables(self.expression) - allowed
        if unknown:
            msg = f"function '{name}' uses unknown names {sorted(unknown)}"
            raise InputError(msg)

    @property
    def variables(self) -> List[str]:
        return list(self.algebroid.coordinates) + self.momenta

    def binding(self, x: DualLike) -> Dict[str, float]:
        point = _dual(self.algebroid, x)
        binding = self.algebroid.binding(point.q)
        binding.update(zip(self.momenta, point.p.tolist()))
        return binding

    def __call__(self, x: DualLike) -> float:
        return self.expression.evaluate(self.binding(x))

    def gradient(self, x: DualLike) -> np.ndarray:
        """Central-difference gradient over (q, p)."""
        binding = self.binding(x)
        values = np.zeros(len(self.variables))
        for index, name in enumerate(self.variables):
            try:
                values[index] = partial(self.expression, name, binding)
            except EvaluationError as e:
                msg = f"d{self.name or 'h'}/d{name}: {e}"
                raise type(e)(msg) from e
        return values

    def momentum_gradient(self, x: DualLike) -> np.ndarray:
        return self.gradient(x)[self.algebroid.m :]


def coordinate_function(algebroid: SkewAlgebroid, index: int) -> ScalarOnDual:
    """Coordinate function x^index of D* (q's first, then p's)."""
    names = list(algebroid.coordinates) + momentum_names(algebroid)
    return ScalarOnDual(algebroid, Variable(names[index]), names[index])


def lambda_matrix(algebroid: SkewAlgebroid, x: DualLike) -> np.ndarray:
    """The 2-vector of the bracket at x as an antisymmetric (m+n) x (m+n) matrix.

    Blocks: (q, q) = 0, (q^j, p_alpha) = rho^j_alpha, (p_alpha, p_beta) = -C^gamma_{alpha beta} p_gamma.
    """
    point = _dual(algebroid, x)
    m, n = algebroid.m, algebroid.n
    anchor = algebroid.anchor_at(point.q)
    matrix = np.zeros((m + n, m + n))
    matrix[:m, m:] = anchor.T
    matrix[m:, :m] = -anchor
    momentum_block = -np.einsum("abg,g->ab", algebroid.structure_at(point.q), point.p)
    matrix[m:, m:] = 0.5 * (momentum_block - momentum_block.T)
    return matrix


def _pair(gradient_left: np.ndarray, gradient_right: np.ndarray, matrix: np.ndarray) -> float:
    return float(gradient_left @ matrix @ gradient_right)


def bracket(algebroid: SkewAlgebroid, phi: ScalarOnDual, psi: ScalarOnDual, x: DualLike) -> float:
    """Bracket ``{phi, psi}(x) = grad phi . Lambda . grad psi``."""
    return _pair(phi.gradient(x), psi.gradient(x), lambda_matrix(algebroid, x))


def bracket_of(algebroid: SkewAlgebroid, phi: ScalarOnDual, psi: ScalarOnDual) -> Callable[[np.ndarray], float]:
    """The function ``x -> {phi, psi}(x)`` on flattened dual points."""

    def evaluate(x: np.ndarray) -> float:
        return bracket(algebroid, phi, psi, DualPoint.from_array(x, algebroid.m))

    return evaluate


def jacobiator(
    algebroid: SkewAlgebroid, phi: ScalarOnDual, psi: ScalarOnDual, chi: ScalarOnDual, x: DualLike
) -> float:
    """Cyclic sum ``{phi,{psi,chi}} + {psi,{chi,phi}} + {chi,{phi,psi}}``.

    Inner brackets are differentiated numerically with the larger nested step.
    """
    point = _dual(algebroid, x)
    flat = point.as_array()
    matrix = lambda_matrix(algebroid, point)
    total = 0.0
    for outer, first, second in ((phi, psi, chi), (psi, chi, phi), (chi, phi, psi)):
        inner_gradient = central_gradient(bracket_of(algebroid, first, second), flat, NESTED_DERIVATIVE_STEP)
        total += _pair(outer.gradient(point), inner_gradient, matrix)
    return total


def coordinate_jacobiator(algebroid: SkewAlgebroid, x: DualLike) -> np.ndarray:
    """Jacobiator of every triple of coordinate functions of D*, shape (m+n, m+n, m+n).

    For coordinate functions the inner bracket is an entry of Lambda, so one central-difference
    derivative of Lambda serves all triples: ``{x_i, {x_j, x_k}} = Lambda_il d_l Lambda_jk``.
    """
    flat = _dual(algebroid, x).as_array()
    matrix = lambda_matrix(algebroid, flat)
    derivative = central_jacobian(lambda y: lambda_matrix(algebroid, y), flat, NESTED_DERIVATIVE_STEP)
    nested = np.einsum("il,jkl->ijk", matrix, derivative)
    return nested + nested.transpose(1, 2, 0) + nested.transpose(2, 0, 1)


def hamiltonian_vf(algebroid: SkewAlgebroid, h: ScalarOnDual, x: DualLike) -> np.ndarray:
    """Hamiltonian vector field of h at x, components (dq/dt, dp/dt).

    ``dq^i/dt = rho^i_alpha dh/dp_alpha`` and
    ``dp_alpha/dt = -(rho^i_alpha dh/dq^i + C^gamma_{alpha beta} p_gamma dh/dp_beta)``.
    """
    point = _dual(algebroid, x)
    m = algebroid.m
    gradient = h.gradient(point)
    dh_dq, dh_dp = gradient[:m], gradient[m:]
    anchor = algebroid.anchor_at(point.q)
    structure = algebroid.structure_at(point.q)
    q_dot = anchor.T @ dh_dp
    p_dot = -(anchor @ dh_dq + np.einsum("abg,g,b->a", structure, point.p, dh_dp))
    return np.concatenate([q_dot, p_dot])


def hamiltonian_vf_matrix(algebroid: SkewAlgebroid, h: ScalarOnDual, x: DualLike) -> np.ndarray:
    """Hamiltonian vector field as ``Lambda . grad h`` (independent code path)."""
    return lambda_matrix(algebroid, x) @ h.gradient(x)


def coordinate_bracket(algebroid: SkewAlgebroid) -> CoordinateBracket:
    """Bracket evaluator on the coordinate functions of D*, for structure extraction."""
    functions = [coordinate_function(algebroid, k) for k in range(algebroid.m + algebroid.n)]

    def evaluate(a: int, b: int, q: np.ndarray, p: np.ndarray) -> float:
        return bracket(algebroid, functions[a], functions[b], DualPoint(as_array(q), np.asarray(p, dtype=float)))

    return evaluate
