"""The almost differential d^D on functions, 1-forms and k-forms."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from ..errors import ConsistencyError, EvaluationError, InputError
from ..expr import Expression, partial
from .sections import DualSection, ExactSection
from .structure import PointLike, SkewAlgebroid

logger = logging.getLogger(__name__)

MAX_DEGREE = 3
CURVATURE_TOLERANCE = 1e-5


def _permutation_sign(indices: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sign of the sorting permutation (0 on repeated indices) and the sorted tuple."""
    items = list(indices)
    if len(set(items)) != len(items):
        return 0, tuple(sorted(items))
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


def base_gradient(algebroid: SkewAlgebroid, f: Expression, q: PointLike) -> np.ndarray:
    """Partial derivatives of a base function, one per coordinate."""
    binding = algebroid.binding(q)
    gradient = np.zeros(algebroid.m)
    for i, name in enumerate(algebroid.coordinates):
        try:
            gradient[i] = partial(f, name, binding)
        except EvaluationError as e:
            msg = f"d/d{name}: {e}"
            raise type(e)(msg) from e
    return gradient


def d_function(algebroid: SkewAlgebroid, f: Expression, q: PointLike) -> np.ndarray:
    """Almost differential of a base function: component gamma is rho_gamma(f)."""
    return algebroid.anchor_at(q) @ base_gradient(algebroid, f, q)


def d_oneform(algebroid: SkewAlgebroid, alpha: DualSection, q: PointLike) -> np.ndarray:
    """Almost differential of a 1-form as an antisymmetric n x n matrix.

    Entry (gamma, nu) is ``rho_gamma(alpha_nu) - rho_nu(alpha_gamma) - C^delta_{gamma nu} alpha_delta``;
    alpha is a 1-cocycle at q iff every entry vanishes.
    """
    anchor = algebroid.anchor_at(q)
    structure = algebroid.structure_at(q)
    values = alpha.components_at(q)
    derivative = anchor @ alpha.jacobian_at(q).T
    return derivative - derivative.T - np.einsum("gnd,d->gn", structure, values)


def cocycle_residual(algebroid: SkewAlgebroid, alpha: DualSection, q: PointLike) -> float:
    """Largest absolute entry of d^D alpha at q."""
    return float(np.max(np.abs(d_oneform(algebroid, alpha, q)), initial=0.0))


@dataclass
class KFormValue:
    """Totally antisymmetric k-form evaluated at one point; sorted indices only."""

    degree: int
    rank: int
    values: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    def __getitem__(self, indices: Sequence[int]) -> float:
        sign, key = _permutation_sign(indices)
        if sign == 0:
            return 0.0
        return sign * self.values.get(key, 0.0)

    def as_array(self) -> np.ndarray:
        """Dense antisymmetric array with ``degree`` axes of length ``rank``."""
        dense = np.zeros((self.rank,) * self.degree) if self.degree else np.zeros(())
        for key, value in self.values.items():
            for perm in itertools.permutations(range(self.degree)):
                sign, _ = _permutation_sign(perm)
                dense[tuple(key[p] for p in perm)] = sign * value
        return dense


class KForm:
    """k-form with expression components indexed by sorted tuples of frame indices."""

    def __init__(self, algebroid: SkewAlgebroid, degree: int, components: Mapping[Tuple[int, ...], Expression]):
        """Initialize the form.

        Args:
            algebroid: Owning algebroid
            degree: Form degree k, 0 <= k <= 3
            components: Map from index tuples to expressions; unsorted tuples are sorted with sign
        """
        if not 0 <= degree <= MAX_DEGREE:
            msg = f"form degree {degree} outside 0..{MAX_DEGREE}"
            raise InputError(msg)
        self.algebroid = algebroid
        self.degree = degree
        self.components: Dict[Tuple[int, ...], Tuple[int, Expression]] = {}
        for indices, expression in components.items():
            if len(indices) != degree or any(not 0 <= i < algebroid.n for i in indices):
                msg = f"component index {indices} invalid for degree {degree}, rank {algebroid.n}"
                raise InputError(msg)
            sign, key = _permutation_sign(indices)
            if sign == 0:
                msg = f"component index {indices} repeats a frame label"
                raise InputError(msg)
            self.components[key] = (sign, expression)

    def value_at(self, q: PointLike) -> KFormValue:
        binding = self.algebroid.binding(q)
        return KFormValue(
            self.degree,
            self.algebroid.n,
            {key: sign * e.evaluate(binding) for key, (sign, e) in self.components.items()},
        )

    def gradients_at(self, q: PointLike) -> Dict[Tuple[int, ...], np.ndarray]:
        """Base gradients of the stored component functions."""
        binding = self.algebroid.binding(q)
        names = self.algebroid.coordinates
        return {
            key: sign * np.array([partial(e, name, binding) for name in names])
            for key, (sign, e) in self.components.items()
        }


def d_kform(algebroid: SkewAlgebroid, omega: KForm, q: PointLike) -> KFormValue:
    """Almost differential of a k-form at q.

    Uses ``(d w)(X_0..X_k) = sum_i (-1)^i rho(X_i)(w(..X_i omitted..))
    + sum_{i<j} (-1)^(i+j) w([[X_i, X_j]], ..X_i, X_j omitted..)``.
    """
    k = omega.degree
    n = algebroid.n
    if k + 1 > n:
        msg = f"cannot differentiate a {k}-form on a rank {n} bundle"
        raise InputError(msg)
    anchor = algebroid.anchor_at(q)
    structure = algebroid.structure_at(q)
    value = omega.value_at(q)
    gradients = omega.gradients_at(q)
    zero = np.zeros(algebroid.m)

    def gradient(indices: Sequence[int]) -> np.ndarray:
        sign, key = _permutation_sign(indices)
        return zero if sign == 0 else sign * gradients.get(key, zero)

    result: Dict[Tuple[int, ...], float] = {}
    for labels in itertools.combinations(range(n), k + 1):
        total = 0.0
        for i, a in enumerate(labels):
            rest = labels[:i] + labels[i + 1 :]
            total += (-1) ** i * float(anchor[a] @ gradient(rest))
        for i, j in itertools.combinations(range(k + 1), 2):
            rest = tuple(x for pos, x in enumerate(labels) if pos not in (i, j))
            bracket = structure[labels[i], labels[j]]
            contraction = sum(bracket[c] * value[(c, *rest)] for c in range(n) if bracket[c] != 0.0)
            total += (-1) ** (i + j) * contraction
        result[labels] = total
    return KFormValue(k + 1, n, result)


def wedge(a: KFormValue, b: KFormValue) -> KFormValue:
    """Exterior product of two form values at the same point."""
    degree = a.degree + b.degree
    if a.rank != b.rank:
        msg = "wedge of forms on different bundles"
        raise InputError(msg)
    scale = 1.0 / (math.factorial(a.degree) * math.factorial(b.degree)) if degree else 1.0
    result: Dict[Tuple[int, ...], float] = {}
    for labels in itertools.combinations(range(a.rank), degree):
        total = 0.0
        for perm in itertools.permutations(range(degree)):
            sign, _ = _permutation_sign(perm)
            ordered = [labels[p] for p in perm]
            total += sign * a[ordered[: a.degree]] * b[ordered[a.degree :]]
        result[labels] = scale * total
    return KFormValue(degree, a.rank, result)


def bracket_defect_fields(algebroid: SkewAlgebroid, q: PointLike) -> np.ndarray:
    """Vector fields ``[rho X_a, rho X_b] - rho [[X_a, X_b]]`` at q, shape (n, n, m)."""
    anchor = algebroid.anchor_at(q)
    derivative = algebroid.anchor_jacobian(q)
    # [rho_a, rho_b]^i = rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a
    along = np.einsum("aj,bij->abi", anchor, derivative)
    commutator = along - along.transpose(1, 0, 2)
    return commutator - np.einsum("abg,gi->abi", algebroid.structure_at(q), anchor)


def curvature_of_function(
    algebroid: SkewAlgebroid, f: Expression, q: PointLike, tolerance: float = CURVATURE_TOLERANCE
) -> np.ndarray:
    """Obstruction ``((d^D)^2 f)(X_a, X_b)`` as an antisymmetric n x n matrix.

    Computed as d^D of the exact section d^D f and cross-checked against the bracket
    defect fields applied to f.

    Raises:
        ConsistencyError: If the two computations differ by more than ``tolerance``
    """
    first = d_oneform(algebroid, ExactSection(algebroid, f), q)
    second = bracket_defect_fields(algebroid, q) @ base_gradient(algebroid, f, q)
    mismatch = float(np.max(np.abs(first - second), initial=0.0))
    scale = 1.0 + float(np.max(np.abs(first), initial=0.0))
    if mismatch > tolerance * scale:
        msg = f"{algebroid.name}: (d^D)^2 f disagrees with bracket defect by {mismatch:.3g}"
        raise ConsistencyError(msg)
    logger.debug(f"curvature check on {algebroid.name}: mismatch {mismatch:.3g}")
    return first
