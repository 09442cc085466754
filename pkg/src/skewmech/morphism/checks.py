"""Morphism conditions and the transfer of Hamilton-Jacobi solutions along a reduction."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..algebroid import DualSection, NumericSection, PointLike, cocycle_residual, d_oneform
from ..dynamics import hj_residual
from ..errors import ContainmentError, InputError, PreconditionError, RankDeficiencyError
from ..numerics import RANK_RTOL
from ..poisson import DualLike, DualPoint, ScalarOnDual
from .bundle_map import BundleMorphism

logger = logging.getLogger(__name__)

LAP_TOLERANCE = 1e-6
CONTAINMENT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class MorphismReport:
    """Sup-norm defects of the bracket and anchor conditions over a grid."""

    max_bracket_defect: float
    max_anchor_defect: float
    points: int

    def passed(self, tolerance: float = LAP_TOLERANCE) -> bool:
        return max(self.max_bracket_defect, self.max_anchor_defect) <= tolerance

    def as_dict(self) -> dict:
        return {
            "max_bracket_defect": self.max_bracket_defect,
            "max_anchor_defect": self.max_anchor_defect,
            "points": self.points,
        }


def _require_grid(grid: Sequence) -> None:
    if len(grid) == 0:
        msg = "morphism checks need at least one grid point"
        raise InputError(msg)


def _defects_at(morphism: BundleMorphism, q: PointLike) -> Tuple[float, float]:
    source, target = morphism.source, morphism.target
    q = source.point(q)
    q_bar = morphism.base_point(q)
    pulled = morphism.fiber_matrix(q)
    pulled_derivative = morphism.fiber_jacobian(q)
    anchor_images = pulled @ source.anchor_at(q)

    # Rows of ``pulled`` are the pulled-back target frame sections on the source frame.
    lhs = np.einsum("aA,bB,ABG->abG", pulled, pulled, source.structure_at(q))
    lhs += np.einsum("ai,bGi->abG", anchor_images, pulled_derivative)
    lhs -= np.einsum("bi,aGi->abG", anchor_images, pulled_derivative)
    rhs = np.einsum("abc,cG->abG", target.structure_at(q_bar), pulled)
    bracket_defect = float(np.max(np.abs(lhs - rhs), initial=0.0))

    pushed = anchor_images @ morphism.tangent_map(q).T
    anchor_defect = float(np.max(np.abs(pushed - target.anchor_at(q_bar)), initial=0.0))
    return bracket_defect, anchor_defect


def check_lap_morphism(morphism: BundleMorphism, grid: Sequence[PointLike]) -> MorphismReport:
    """Check that F~ is a linear almost Poisson morphism at every grid point.

    For each pair of target frame sections the bracket of their pullbacks must equal the pullback
    of their bracket, and TF must carry the anchor of a pullback to the target anchor.
    """
    _require_grid(grid)
    bracket_defect = anchor_defect = 0.0
    for q in grid:
        b, a = _defects_at(morphism, q)
        bracket_defect = max(bracket_defect, b)
        anchor_defect = max(anchor_defect, a)
    report = MorphismReport(bracket_defect, anchor_defect, len(grid))
    logger.info(
        f"{morphism.name}: bracket defect {bracket_defect:.3g}, anchor defect {anchor_defect:.3g} "
        f"over {len(grid)} points"
    )
    return report


def check_hamiltonian_morphism(
    morphism: BundleMorphism,
    h: ScalarOnDual,
    h_bar: ScalarOnDual,
    grid: Sequence[DualLike],
    lap_tolerance: float = LAP_TOLERANCE,
) -> float:
    """Return ``max |h - h-bar o F~|`` over dual grid points.

    Raises:
        PreconditionError: If F~ fails the linear almost Poisson morphism check on the grid
    """
    _require_grid(grid)
    points = [x if isinstance(x, DualPoint) else DualPoint.from_array(x, morphism.source.m) for x in grid]
    lap = check_lap_morphism(morphism, [x.q for x in points])
    if not lap.passed(lap_tolerance):
        msg = (
            f"{morphism.name} is not a linear almost Poisson morphism "
            f"(bracket {lap.max_bracket_defect:.3g}, anchor {lap.max_anchor_defect:.3g})"
        )
        raise PreconditionError(msg)
    return max(abs(h(x) - h_bar(morphism.apply_dual(x))) for x in points)


def related_differential_defect(
    morphism: BundleMorphism, alpha_bar: DualSection, alpha: DualSection, q: PointLike
) -> float:
    """Entrywise distance between d^D alpha on pulled-back frame pairs and d^D-bar alpha-bar at F(q)."""
    q = morphism.source.point(q)
    pulled = morphism.fiber_matrix(q)
    source_side = pulled @ d_oneform(morphism.source, alpha, q) @ pulled.T
    target_side = d_oneform(morphism.target, alpha_bar, morphism.base_point(q))
    return float(np.max(np.abs(source_side - target_side), initial=0.0))


@dataclass(frozen=True)
class TransferReport:
    """Residuals on both sides of a transferred Hamilton-Jacobi candidate."""

    max_source_cocycle: float
    max_target_cocycle: float
    max_round_trip: float
    max_related_defect: float
    max_source_hj: Optional[float]
    max_target_hj: Optional[float]
    constancy_deviation: Optional[float]
    points: int

    def as_dict(self) -> dict:
        return {
            "max_source_cocycle": self.max_source_cocycle,
            "max_target_cocycle": self.max_target_cocycle,
            "max_round_trip": self.max_round_trip,
            "max_related_defect": self.max_related_defect,
            "max_source_hj": self.max_source_hj,
            "max_target_hj": self.max_target_hj,
            "constancy_deviation": self.constancy_deviation,
            "points": self.points,
        }


def _solve_transfer(morphism: BundleMorphism, alpha_bar: DualSection, q: np.ndarray) -> np.ndarray:
    matrix = morphism.fiber_matrix(q)
    rhs = alpha_bar.components_at(morphism.base_point(q))
    solution, _, rank, _ = np.linalg.lstsq(matrix, rhs, rcond=RANK_RTOL)
    if rank < morphism.source.n:
        msg = f"{morphism.name}: fiber map has rank {rank} < {morphism.source.n} at {q.tolist()}"
        raise RankDeficiencyError(msg)
    return solution


def transfer_hj(
    morphism: BundleMorphism,
    alpha_bar: DualSection,
    grid: Sequence[PointLike],
    h: Optional[ScalarOnDual] = None,
    h_bar: Optional[ScalarOnDual] = None,
    containment_tolerance: float = CONTAINMENT_TOLERANCE,
) -> Tuple[NumericSection, TransferReport]:
    """Pull a target section back along an injective fiber map.

    The source section solves ``F~(q) alpha(q) = alpha-bar(F(q))``. Containment of alpha-bar in
    the image of F~ is checked at every grid point.

    Args:
        morphism: Fiberwise injective morphism
        alpha_bar: Section of D-bar*
        grid: Source base points
        h: Source Hamiltonian, enables the source HJ residual and constancy deviation
        h_bar: Target Hamiltonian, enables the target HJ residual
        containment_tolerance: Largest accepted least-squares residual

    Returns:
        Tuple of the source section and a TransferReport

    Raises:
        PreconditionError: If the morphism is not flagged injective
        RankDeficiencyError: If F~ loses rank at a grid point
        ContainmentError: If alpha-bar(F(q)) is not in the image of F~(q)
    """
    _require_grid(grid)
    if not morphism.injective:
        msg = f"{morphism.name} is not flagged fiberwise injective"
        raise PreconditionError(msg)
    source = morphism.source
    alpha = NumericSection(
        source, lambda q: _solve_transfer(morphism, alpha_bar, q), name=f"pullback of {morphism.target.name}"
    )

    round_trip: List[float] = []
    source_cocycle: List[float] = []
    target_cocycle: List[float] = []
    related: List[float] = []
    source_hj: List[float] = []
    target_hj: List[float] = []
    energies: List[float] = []
    for q in grid:
        q = source.point(q)
        q_bar = morphism.base_point(q)
        values = alpha.components_at(q)
        residual = float(np.max(np.abs(morphism.fiber_matrix(q) @ values - alpha_bar.components_at(q_bar))))
        if residual > containment_tolerance:
            msg = f"target section leaves the image of the fiber map at {q.tolist()} (residual {residual:.3g})"
            raise ContainmentError(msg)
        round_trip.append(residual)
        source_cocycle.append(cocycle_residual(source, alpha, q))
        target_cocycle.append(cocycle_residual(morphism.target, alpha_bar, q_bar))
        related.append(related_differential_defect(morphism, alpha_bar, alpha, q))
        if h is not None:
            source_hj.append(float(np.max(np.abs(hj_residual(source, h, alpha, q)), initial=0.0)))
            energies.append(h(DualPoint(q, values)))
        if h_bar is not None:
            target_residual = hj_residual(morphism.target, h_bar, alpha_bar, q_bar)
            target_hj.append(float(np.max(np.abs(target_residual), initial=0.0)))

    report = TransferReport(
        max_source_cocycle=max(source_cocycle),
        max_target_cocycle=max(target_cocycle),
        max_round_trip=max(round_trip),
        max_related_defect=max(related),
        max_source_hj=max(source_hj) if source_hj else None,
        max_target_hj=max(target_hj) if target_hj else None,
        constancy_deviation=max(abs(e - energies[0]) for e in energies) if energies else None,
        points=len(grid),
    )
    logger.info(
        f"{morphism.name}: source cocycle {report.max_source_cocycle:.3g}, "
        f"target cocycle {report.max_target_cocycle:.3g}"
    )
    return alpha, report
