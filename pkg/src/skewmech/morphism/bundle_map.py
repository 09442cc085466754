"""Vector bundle morphisms between dual bundles of two algebroids."""

import logging
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..algebroid import PointLike, SkewAlgebroid
from ..errors import EvaluationError, InputError, RankDeficiencyError
from ..expr import BinaryOp, Expression, Number, Variable, free_variables, partial
from ..numerics import central_jacobian, numeric_rank
from ..poisson import DualLike, DualPoint

logger = logging.getLogger(__name__)

TargetCoefficients = Union[Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


class BundleMorphism:
    """Linear map ``F~: D* -> D-bar*`` covering a base map ``F: Q -> Q-bar``.

    The fiber map is stored on the source chart: entry ``[a, alpha]`` is the component of the
    image of the coframe element X^alpha along the target coframe element X-bar^a, written in
    source coordinates.
    """

    def __init__(
        self,
        source: SkewAlgebroid,
        target: SkewAlgebroid,
        base_map: Sequence[Expression],
        fiber_map: Sequence[Sequence[Expression]],
        injective: bool = False,
        name: str = "",
    ):
        """Initialize the morphism.

        Args:
            source: Algebroid D over Q
            target: Algebroid D-bar over Q-bar
            base_map: One expression per target coordinate, in source coordinates
            fiber_map: Target-rank rows of source-rank expressions
            injective: Whether F~ is declared fiberwise injective
            name: Morphism label

        Raises:
            InputError: If the shapes or free variables do not fit the two algebroids
        """
        self.source = source
        self.target = target
        self.name = name or f"{source.name}->{target.name}"
        self.base_map = tuple(base_map)
        self.fiber_map = tuple(tuple(row) for row in fiber_map)
        self.injective = injective
        if len(self.base_map) != target.m:
            msg = f"{self.name}: base map needs {target.m} components, got {len(self.base_map)}"
            raise InputError(msg)
        if len(self.fiber_map) != target.n or any(len(row) != source.n for row in self.fiber_map):
            msg = f"{self.name}: fiber map must be {target.n} x {source.n}"
            raise InputError(msg)
        allowed = set(source.coordinates) | set(source.parameters)
        for expression in list(self.base_map) + [e for row in self.fiber_map for e in row]:
            unknown = free_variables(expression) - allowed
            if unknown:
                msg = f"{self.name}: map uses unknown names {sorted(unknown)}"
                raise InputError(msg)

    def _evaluate(self, expressions: Sequence[Expression], q: PointLike, what: str) -> np.ndarray:
        binding = self.source.binding(q)
        try:
            return np.array([e.evaluate(binding) for e in expressions])
        except EvaluationError as e:
            msg = f"{self.name}: {what}: {e}"
            raise type(e)(msg) from e

    def base_point(self, q: PointLike) -> np.ndarray:
        """F(q) in target coordinates."""
        return self._evaluate(self.base_map, q, "base map")

    def fiber_matrix(self, q: PointLike) -> np.ndarray:
        """F~(q) of shape (target n, source n)."""
        flat = self._evaluate([e for row in self.fiber_map for e in row], q, "fiber map")
        return flat.reshape(self.target.n, self.source.n)

    def fiber_jacobian(self, q: PointLike) -> np.ndarray:
        """Derivatives of F~ entries, shape (target n, source n, source m)."""
        binding = self.source.binding(q)
        coordinates = self.source.coordinates
        return np.array([[[partial(e, c, binding) for c in coordinates] for e in row] for row in self.fiber_map])

    def tangent_map(self, q: PointLike) -> np.ndarray:
        """TF at q, shape (target m, source m)."""
        return central_jacobian(self.base_point, self.source.point(q))

    def apply_dual(self, x: DualLike) -> DualPoint:
        """Image of a point of D* in D-bar*."""
        point = x if isinstance(x, DualPoint) else DualPoint.from_array(x, self.source.m)
        return DualPoint(self.base_point(point.q), self.fiber_matrix(point.q) @ point.p)

    def check_injective(self, points: Sequence[PointLike]) -> None:
        """Verify full column rank of F~ at each point.

        Raises:
            RankDeficiencyError: If F~(q) loses rank somewhere
        """
        for q in points:
            rank = numeric_rank(self.fiber_matrix(q))
            if rank != self.source.n:
                msg = f"{self.name}: fiber map has rank {rank} < {self.source.n} at {self.source.point(q).tolist()}"
                raise RankDeficiencyError(msg)

    def __repr__(self) -> str:
        return f"BundleMorphism({self.name!r})"


def identity_morphism(algebroid: SkewAlgebroid) -> BundleMorphism:
    """Identity of D* over the identity of Q."""
    base_map = [Variable(c) for c in algebroid.coordinates]
    fiber_map = [[Number(1.0 if a == b else 0.0) for b in range(algebroid.n)] for a in range(algebroid.n)]
    return BundleMorphism(algebroid, algebroid, base_map, fiber_map, injective=True, name=f"id_{algebroid.name}")


def scale_fiber_row(morphism: BundleMorphism, row: int, factor: float) -> BundleMorphism:
    """Copy of ``morphism`` with fiber map row ``row`` (0-based) multiplied by ``factor``."""
    if not 0 <= row < morphism.target.n:
        msg = f"row {row} out of range for a fiber map with {morphism.target.n} rows"
        raise InputError(msg)
    rows: List[List[Expression]] = [list(r) for r in morphism.fiber_map]
    rows[row] = [BinaryOp("*", Number(float(factor)), e) for e in rows[row]]
    return BundleMorphism(
        morphism.source,
        morphism.target,
        morphism.base_map,
        rows,
        morphism.injective,
        f"{morphism.name}[row {row} x {factor:g}]",
    )


def pullback_section(
    morphism: BundleMorphism, coefficients: TargetCoefficients, q: PointLike, target_point: Optional[np.ndarray] = None
) -> np.ndarray:
    """Coefficients on the source frame of the pullback of a target section.

    Args:
        morphism: The bundle morphism
        coefficients: Target-frame coefficients, constant or a function of the target point
        q: Source base point
        target_point: Precomputed F(q)

    Returns:
        ``sum_a F~[a, alpha](q) X-bar_a(F(q))`` for each source index alpha
    """
    q_bar = morphism.base_point(q) if target_point is None else target_point
    values = coefficients(q_bar) if callable(coefficients) else coefficients
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size != morphism.target.n:
        msg = f"{morphism.name}: target section needs {morphism.target.n} coefficients, got {values.size}"
        raise InputError(msg)
    return morphism.fiber_matrix(q).T @ values
