"""Lagrangian and kernel tests for the image of a section alpha: Q -> D*."""

import logging
from dataclasses import dataclass

import numpy as np

from ..algebroid import DualSection, PointLike, SkewAlgebroid, cocycle_residual
from ..errors import PreconditionError
from ..numerics import normalize_columns, nullspace, numeric_rank, same_span
from .bracket import DualPoint, lambda_matrix

logger = logging.getLogger(__name__)

KERNEL_TOLERANCE = 1e-8
COCYCLE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class LagrangianReport:
    """Outcome of the Lagrangian test at one base point."""

    dim_l: int
    dim_annihilator: int
    holds: bool


def tangent_image(algebroid: SkewAlgebroid, alpha: DualSection, q: PointLike) -> np.ndarray:
    """Spanning vectors of ``L_{alpha,D}(q)``, one column per frame label.

    Column gamma has base part ``rho_gamma(q)`` and fiber part ``sum_i d_i alpha_A rho^i_gamma``.
    """
    anchor = algebroid.anchor_at(q)
    fiber = alpha.jacobian_at(q) @ anchor.T
    return np.vstack([anchor.T, fiber])


def lagrangian_subspace_check(algebroid: SkewAlgebroid, alpha: DualSection, q: PointLike) -> LagrangianReport:
    """Decide whether ``#_Lambda(L^0) = L`` at the lifted point ``alpha(q)``."""
    q = algebroid.point(q)
    span = normalize_columns(tangent_image(algebroid, alpha, q))
    dim_l = numeric_rank(span) if span.size else 0
    annihilator = nullspace(span.T) if span.size else np.eye(algebroid.m + algebroid.n)
    matrix = lambda_matrix(algebroid, DualPoint(q, alpha.components_at(q)))
    image = matrix.T @ annihilator
    holds = same_span(image, span)
    logger.debug(f"Lagrangian check at {q.tolist()}: dim L={dim_l}, dim L0={annihilator.shape[1]}, holds={holds}")
    return LagrangianReport(dim_l, annihilator.shape[1], holds)


def kernel_inclusion_check(
    algebroid: SkewAlgebroid,
    alpha: DualSection,
    q: PointLike,
    tolerance: float = KERNEL_TOLERANCE,
    cocycle_tolerance: float = COCYCLE_TOLERANCE,
) -> bool:
    """Check ``Ker #_Lambda(alpha(q))`` is contained in the annihilator of ``L_{alpha,D}(q)``.

    Raises:
        PreconditionError: If alpha is not a 1-cocycle at q
    """
    q = algebroid.point(q)
    residual = cocycle_residual(algebroid, alpha, q)
    if residual > cocycle_tolerance:
        msg = f"section is not a 1-cocycle at q={q.tolist()} (residual {residual:.3g})"
        raise PreconditionError(msg)
    span = normalize_columns(tangent_image(algebroid, alpha, q))
    kernel = nullspace(lambda_matrix(algebroid, DualPoint(q, alpha.components_at(q))))
    if kernel.size == 0 or span.size == 0:
        return True
    worst = float(np.max(np.abs(kernel.T @ span)))
    logger.debug(f"Kernel inclusion at {q.tolist()}: kernel dim {kernel.shape[1]}, worst pairing {worst:.3g}")
    return worst <= tolerance
