"""Skew-symmetric algebroids over a single coordinate chart.

An algebroid is seen through two numeric maps: the anchor ``anchor_at(q)`` with entry
``[alpha, i] = rho^i_alpha(q)`` and the structure functions ``structure_at(q)`` with entry
``[alpha, beta, gamma] = C^gamma_{alpha beta}(q)``. Frames are orthonormal for the bundle
metric, so the metric is the identity in frame components.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ChartDomainError, EvaluationError, InputError
from ..expr import ZERO, Expression, Number, free_variables
from ..numerics import central_jacobian

logger = logging.getLogger(__name__)

EXCLUSION_MARGIN = 1e-3


@dataclass(frozen=True)
class BasePoint:
    """Point of the base chart; parameters are bound on the algebroid."""

    coordinates: Tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.array(self.coordinates, dtype=float)


PointLike = Union[BasePoint, Sequence[float], np.ndarray]


def as_array(q: PointLike) -> np.ndarray:
    """Convert any point representation to a fresh float array."""
    if isinstance(q, BasePoint):
        return q.as_array()
    return np.array(q, dtype=float).reshape(-1)


@dataclass(frozen=True)
class ChartDomain:
    """Box constraints and excluded loci of a chart.

    ``excluded`` holds expressions that must stay away from zero (e.g. ``cos(phi)`` for a
    chart that excludes ``phi = +-pi/2``).
    """

    bounds: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    excluded: Tuple[Expression, ...] = ()
    reference_point: Mapping[str, float] = field(default_factory=dict)

    def violation(self, coordinates: Sequence[str], q: np.ndarray, binding: Mapping[str, float]) -> Optional[str]:
        """Describe why ``q`` is outside the chart, or return None."""
        for name, value in zip(coordinates, q):
            if not np.isfinite(value):
                return f"{name} is not finite"
            if name in self.bounds:
                low, high = self.bounds[name]
                if not low <= value <= high:
                    return f"{name}={value:.6g} outside [{low:.6g}, {high:.6g}]"
        for locus in self.excluded:
            try:
                level = locus.evaluate(binding)
            except EvaluationError as e:
                return f"excluded locus evaluation failed: {e}"
            if abs(level) < EXCLUSION_MARGIN:
                return f"point lies on an excluded locus ({level:.3g})"
        return None


class SkewAlgebroid(ABC):
    """Numeric interface shared by every algebroid realization."""

    def __init__(
        self,
        name: str,
        coordinates: Sequence[str],
        frame: Sequence[str],
        parameters: Optional[Mapping[str, float]] = None,
        chart_domain: Optional[ChartDomain] = None,
        lie_algebroid: bool = False,
        constrained: bool = False,
        constrained_rank: Optional[int] = None,
    ):
        """Initialize the shared metadata.

        Args:
            name: Model name
            coordinates: Base coordinate names q^1..q^m
            frame: Frame labels X_1..X_n
            parameters: Bound parameter values
            chart_domain: Chart restrictions
            lie_algebroid: Whether the bracket is expected to satisfy Jacobi
            constrained: Whether this algebroid models a constraint distribution D
            constrained_rank: Number of leading frame labels spanning D in an adapted ambient frame
        """
        self.name = name
        self.coordinates: Tuple[str, ...] = tuple(coordinates)
        self.frame: Tuple[str, ...] = tuple(frame)
        self.parameters: Dict[str, float] = dict(parameters or {})
        self.chart_domain = chart_domain or ChartDomain()
        self.lie_algebroid = lie_algebroid
        self.constrained = constrained
        self.constrained_rank = constrained_rank

    @property
    def m(self) -> int:
        """Base dimension."""
        return len(self.coordinates)

    @property
    def n(self) -> int:
        """Rank of the bundle."""
        return len(self.frame)

    def point(self, q: PointLike) -> np.ndarray:
        """Coerce ``q`` to an array of length m."""
        values = as_array(q)
        if values.size != self.m:
            msg = f"{self.name}: expected {self.m} base coordinates, got {values.size}"
            raise InputError(msg)
        return values

    def binding(self, q: PointLike) -> Dict[str, float]:
        """Variable binding for expressions at ``q``: parameters plus coordinates."""
        values = self.point(q)
        binding = dict(self.parameters)
        binding.update(zip(self.coordinates, values.tolist()))
        return binding

    def check_point(self, q: PointLike) -> np.ndarray:
        """Return ``q`` as an array after verifying it lies in the chart.

        Raises:
            ChartDomainError: If ``q`` leaves the chart box or hits an excluded locus
        """
        values = self.point(q)
        reason = self.chart_domain.violation(self.coordinates, values, self.binding(values))
        if reason is not None:
            msg = f"{self.name}: {reason}"
            raise ChartDomainError(msg)
        return values

    def in_chart(self, q: PointLike) -> bool:
        values = self.point(q)
        return self.chart_domain.violation(self.coordinates, values, self.binding(values)) is None

    def reference_point(self) -> np.ndarray:
        """Model-provided reference point, else the center of the chart box."""
        values = []
        for name in self.coordinates:
            if name in self.chart_domain.reference_point:
                values.append(self.chart_domain.reference_point[name])
            else:
                low, high = self.chart_domain.bounds.get(name, (-1.0, 1.0))
                values.append(0.5 * (low + high))
        return np.array(values, dtype=float)

    def sample_points(self, rng: np.random.Generator, count: int) -> List[np.ndarray]:
        """Draw uniform random points of the chart box, rejecting excluded loci."""
        lows = np.array([self.chart_domain.bounds.get(c, (-1.0, 1.0))[0] for c in self.coordinates])
        highs = np.array([self.chart_domain.bounds.get(c, (-1.0, 1.0))[1] for c in self.coordinates])
        points: List[np.ndarray] = []
        attempts = 0
        while len(points) < count:
            attempts += 1
            if attempts > 1000 * max(count, 1):
                msg = f"{self.name}: could not sample {count} points inside the chart"
                raise ChartDomainError(msg)
            candidate = rng.uniform(lows, highs)
            if self.in_chart(candidate):
                points.append(candidate)
        return points

    @abstractmethod
    def anchor_at(self, q: PointLike) -> np.ndarray:
        """Anchor matrix of shape (n, m), entry [alpha, i] = rho^i_alpha(q)."""

    @abstractmethod
    def structure_at(self, q: PointLike) -> np.ndarray:
        """Structure functions of shape (n, n, n), entry [alpha, beta, gamma] = C^gamma_{alpha beta}(q)."""

    def anchor_jacobian(self, q: PointLike) -> np.ndarray:
        """Central-difference derivatives of the anchor, shape (n, m, m); last axis is d/dq^j."""
        return central_jacobian(self.anchor_at, self.point(q))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, m={self.m}, n={self.n})"


def _wrap(error: EvaluationError, where: str) -> EvaluationError:
    return type(error)(f"{where}: {error}")


class _CompiledEntry:
    """Expression with its value cached when it depends on parameters only."""

    __slots__ = ("expression", "constant")

    def __init__(self, expression: Expression, coordinates: Sequence[str], parameters: Mapping[str, float]):
        self.expression = expression
        self.constant: Optional[float] = None
        if not free_variables(expression) & set(coordinates):
            self.constant = expression.evaluate(parameters)

    def value(self, binding: Mapping[str, float]) -> float:
        if self.constant is not None:
            return self.constant
        return self.expression.evaluate(binding)


class ExpressionAlgebroid(SkewAlgebroid):
    """Algebroid whose anchor and structure functions are expressions.

    Only entries with ``alpha < beta`` are stored; the rest follow by antisymmetry.
    """

    def __init__(
        self,
        name: str,
        coordinates: Sequence[str],
        frame: Sequence[str],
        anchor: Sequence[Sequence[Expression]],
        structure: Mapping[Tuple[int, int, int], Expression],
        parameters: Optional[Mapping[str, float]] = None,
        **kwargs,
    ):
        """Initialize from expression tables.

        Args:
            name: Model name
            coordinates: Base coordinate names
            frame: Frame labels
            anchor: n rows of m expressions
            structure: Map (alpha, beta, gamma) -> C^gamma_{alpha beta} with alpha < beta
            parameters: Bound parameter values
            **kwargs: Remaining SkewAlgebroid options
        """
        super().__init__(name, coordinates, frame, parameters, **kwargs)
        if len(anchor) != self.n or any(len(row) != self.m for row in anchor):
            msg = f"{name}: anchor must be {self.n}x{self.m}"
            raise InputError(msg)
        for alpha, beta, gamma in structure:
            if not (0 <= alpha < beta < self.n and 0 <= gamma < self.n):
                msg = f"{name}: structure index {(alpha, beta, gamma)} must satisfy alpha < beta < n"
                raise InputError(msg)
        self.anchor: Tuple[Tuple[Expression, ...], ...] = tuple(tuple(row) for row in anchor)
        self.structure: Dict[Tuple[int, int, int], Expression] = dict(structure)
        self._anchor_entries = [
            [_CompiledEntry(e, self.coordinates, self.parameters) for e in row] for row in self.anchor
        ]
        self._structure_entries = {
            key: _CompiledEntry(e, self.coordinates, self.parameters) for key, e in self.structure.items()
        }

    def anchor_at(self, q: PointLike) -> np.ndarray:
        binding = self.binding(q)
        values = np.zeros((self.n, self.m))
        for alpha, row in enumerate(self._anchor_entries):
            for i, entry in enumerate(row):
                try:
                    values[alpha, i] = entry.value(binding)
                except EvaluationError as e:
                    raise _wrap(e, f"{self.name} anchor[{alpha}][{i}]") from e
        return values

    def structure_at(self, q: PointLike) -> np.ndarray:
        binding = self.binding(q)
        values = np.zeros((self.n, self.n, self.n))
        for (alpha, beta, gamma), entry in self._structure_entries.items():
            try:
                value = entry.value(binding)
            except EvaluationError as e:
                raise _wrap(e, f"{self.name} structure[{alpha}][{beta}][{gamma}]") from e
            values[alpha, beta, gamma] = value
            values[beta, alpha, gamma] = -value
        return values


def standard_tangent(
    coordinates: Sequence[str],
    parameters: Optional[Mapping[str, float]] = None,
    name: str = "tangent",
    chart_domain: Optional[ChartDomain] = None,
) -> ExpressionAlgebroid:
    """Tangent bundle TQ in the coordinate frame: identity anchor, zero structure."""
    m = len(coordinates)
    anchor = [[Number(1.0) if i == j else ZERO for j in range(m)] for i in range(m)]
    frame = [f"d_{c}" for c in coordinates]
    return ExpressionAlgebroid(
        name, coordinates, frame, anchor, {}, parameters, chart_domain=chart_domain, lie_algebroid=True
    )


class FramedAlgebroid(SkewAlgebroid):
    """Adapted frame written over the basis of a parent algebroid.

    Row ``a`` of the frame matrix gives ``X_a = sum_B M[a, B] e_B`` in the parent basis.
    The anchor is ``M @ rho_parent``; structure functions come from expanding
    ``[[X_a, X_b]]`` with the parent structure plus anchor derivatives of the coefficients
    and solving back into the frame.
    """

    def __init__(
        self,
        name: str,
        parent: SkewAlgebroid,
        frame: Sequence[str],
        rows: Sequence[Sequence[Expression]],
        metric: Optional[Sequence[Sequence[Expression]]] = None,
        parameters: Optional[Mapping[str, float]] = None,
        **kwargs,
    ):
        """Initialize the framed algebroid.

        Args:
            name: Model name
            parent: Algebroid whose basis the rows are written in
            frame: Labels of the new frame
            rows: Square frame matrix of expressions in the parent coordinates
            metric: Bundle metric in the parent basis, used for orthonormality checks
            parameters: Parameters bound on top of the parent's
            **kwargs: Remaining SkewAlgebroid options
        """
        merged = dict(parent.parameters)
        merged.update(parameters or {})
        kwargs.setdefault("chart_domain", parent.chart_domain)
        super().__init__(name, parent.coordinates, frame, merged, **kwargs)
        if len(rows) != parent.n or any(len(row) != parent.n for row in rows) or self.n != parent.n:
            msg = f"{name}: frame matrix must be {parent.n}x{parent.n}"
            raise InputError(msg)
        self.parent = parent
        self.rows: Tuple[Tuple[Expression, ...], ...] = tuple(tuple(row) for row in rows)
        self.metric: Optional[Tuple[Tuple[Expression, ...], ...]] = (
            None if metric is None else tuple(tuple(row) for row in metric)
        )
        self._row_entries = [[_CompiledEntry(e, self.coordinates, self.parameters) for e in row] for row in self.rows]

    def frame_matrix(self, q: PointLike) -> np.ndarray:
        binding = self.binding(q)
        values = np.zeros((self.n, self.n))
        for a, row in enumerate(self._row_entries):
            for b, entry in enumerate(row):
                try:
                    values[a, b] = entry.value(binding)
                except EvaluationError as e:
                    raise _wrap(e, f"{self.name} frame[{a}][{b}]") from e
        return values

    def metric_at(self, q: PointLike) -> Optional[np.ndarray]:
        """Bundle metric in the parent basis, or None when the model stores none."""
        if self.metric is None:
            return None
        binding = self.binding(q)
        return np.array([[e.evaluate(binding) for e in row] for row in self.metric])

    def gram_at(self, q: PointLike) -> Optional[np.ndarray]:
        """Metric in frame components; the identity for an orthonormal frame."""
        metric = self.metric_at(q)
        if metric is None:
            return None
        frame = self.frame_matrix(q)
        return frame @ metric @ frame.T

    def anchor_at(self, q: PointLike) -> np.ndarray:
        return self.frame_matrix(q) @ self.parent.anchor_at(q)

    def structure_at(self, q: PointLike) -> np.ndarray:
        values = self.point(q)
        frame = self.frame_matrix(values)
        try:
            inverse = np.linalg.inv(frame)
        except np.linalg.LinAlgError as e:
            msg = f"{self.name}: frame matrix is singular at q={values.tolist()}"
            raise EvaluationError(msg) from e
        frame_jacobian = central_jacobian(self.frame_matrix, values)
        anchor = frame @ self.parent.anchor_at(values)
        parent_structure = self.parent.structure_at(values)
        # derivative of the coefficient M[b, E] along the anchor of X_a
        along = np.einsum("ai,bei->abe", anchor, frame_jacobian)
        expanded = np.einsum("aB,bC,BCE->abE", frame, frame, parent_structure) + along - along.transpose(1, 0, 2)
        return np.einsum("abE,Ec->abc", expanded, inverse)


class RestrictedAlgebroid(SkewAlgebroid):
    """Leading block of an adapted orthonormal frame: anchor rows and D-components of brackets."""

    def __init__(self, ambient: SkewAlgebroid, rank: int, name: Optional[str] = None):
        """Initialize the restriction.

        Args:
            ambient: Algebroid with an adapted frame
            rank: Number of leading frame labels spanning D
            name: Name of the restricted algebroid
        """
        super().__init__(
            name or f"{ambient.name}|D",
            ambient.coordinates,
            ambient.frame[:rank],
            ambient.parameters,
            chart_domain=ambient.chart_domain,
            lie_algebroid=False,
            constrained=True,
        )
        self.ambient = ambient
        self.rank = rank

    def anchor_at(self, q: PointLike) -> np.ndarray:
        return self.ambient.anchor_at(q)[: self.rank]

    def structure_at(self, q: PointLike) -> np.ndarray:
        k = self.rank
        return self.ambient.structure_at(q)[:k, :k, :k]
