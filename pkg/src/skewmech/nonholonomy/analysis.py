"""Bracket-generated rank growth and completely-nonholonomic verdicts."""

import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO

import numpy as np

from ..algebroid import PointLike, SkewAlgebroid
from ..errors import InputError
from ..numerics import numeric_rank
from .fields import AnchorField, BracketField, VectorField

logger = logging.getLogger(__name__)

RANK_RTOL = 1e-8
COMPLETELY_NONHOLONOMIC = "completely_nonholonomic"
RANK_DEFICIENT = "rank_deficient"


@dataclass
class NonholonomyRow:
    """Rank growth at one base point."""

    point: np.ndarray
    m: int
    ranks: List[int]
    witnesses: List[str] = field(default_factory=list)

    @property
    def stabilized_rank(self) -> int:
        return self.ranks[-1]

    @property
    def verdict(self) -> str:
        return COMPLETELY_NONHOLONOMIC if self.stabilized_rank == self.m else RANK_DEFICIENT


@dataclass
class NonholonomyReport:
    """Per-point rank rows and the overall verdict."""

    model: str
    coordinates: Sequence[str]
    rows: List[NonholonomyRow]

    @property
    def verdict(self) -> str:
        if all(row.verdict == COMPLETELY_NONHOLONOMIC for row in self.rows):
            return COMPLETELY_NONHOLONOMIC
        return RANK_DEFICIENT

    @property
    def stabilized_ranks(self) -> List[int]:
        return [row.stabilized_rank for row in self.rows]

    def _point_text(self, row: NonholonomyRow) -> str:
        return ",".join(f"{name}={value:.6g}" for name, value in zip(self.coordinates, row.point))

    def to_text(self) -> str:
        """Aligned table of point, rank sequence and verdict."""
        lines = [(self._point_text(row), "-".join(str(r) for r in row.ranks), row.verdict) for row in self.rows]
        headers = ("point", "ranks", "verdict")
        widths = [max([len(headers[k])] + [len(line[k]) for line in lines]) for k in range(2)]
        out = [f"{headers[0]:<{widths[0]}}  {headers[1]:<{widths[1]}}  {headers[2]}"]
        out.extend(f"{p:<{widths[0]}}  {r:<{widths[1]}}  {v}" for p, r, v in lines)
        out.append(f"verdict: {self.verdict}")
        return "\n".join(out)

    def to_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(list(self.coordinates) + ["ranks", "stabilized_rank", "verdict", "witnesses"])
        for row in self.rows:
            writer.writerow(
                [format(float(v), ".17g") for v in row.point]
                + ["-".join(str(r) for r in row.ranks), row.stabilized_rank, row.verdict, " ".join(row.witnesses)]
            )


def bracket_closure_rank(
    algebroid: SkewAlgebroid, q: PointLike, max_depth: Optional[int] = None, rtol: float = RANK_RTOL
) -> NonholonomyRow:
    """Grow the span of iterated brackets of the anchor fields at q.

    Sweep k brackets the fields accepted in sweep k-1 with every field collected before
    sweep k and keeps a bracket only when it raises the numeric rank at q. Stops at full
    rank, after a sweep that adds nothing, or at ``max_depth`` (default 2m).
    """
    point = algebroid.point(q)
    depth_limit = 2 * algebroid.m if max_depth is None else max_depth
    if depth_limit < 1:
        msg = f"max_depth must be at least 1, got {depth_limit}"
        raise InputError(msg)
    pool: List[VectorField] = [AnchorField(algebroid, alpha) for alpha in range(algebroid.n)]
    values = [generator(point) for generator in pool]
    rank = numeric_rank(np.array(values), rtol)
    ranks = [rank]
    witnesses: List[str] = []
    frontier = list(pool)
    seen = set()
    for depth in range(1, depth_limit + 1):
        if rank == algebroid.m:
            break
        added: List[VectorField] = []
        # Fields accepted during this sweep wait for the next one.
        collected = list(pool)
        for left in frontier:
            for right in collected:
                key = frozenset((id(left), id(right)))
                if left is right or key in seen:
                    continue
                seen.add(key)
                candidate = BracketField(left, right)
                value = candidate(point)
                new_rank = numeric_rank(np.array(values + [value]), rtol)
                if new_rank > rank:
                    pool.append(candidate)
                    values.append(value)
                    added.append(candidate)
                    witnesses.append(candidate.label)
                    rank = new_rank
                    logger.debug(f"depth {depth}: {candidate.label} raises rank to {rank}")
                    if rank == algebroid.m:
                        break
            if rank == algebroid.m:
                break
        ranks.append(rank)
        if not added:
            break
        frontier = added
    return NonholonomyRow(point, algebroid.m, ranks, witnesses)


def verdict(
    algebroid: SkewAlgebroid, sample_points: Sequence[PointLike], max_depth: Optional[int] = None
) -> NonholonomyReport:
    """Completely nonholonomic iff every sampled point reaches rank m."""
    if not sample_points:
        msg = "verdict needs at least one sample point"
        raise InputError(msg)
    rows = [bracket_closure_rank(algebroid, q, max_depth) for q in sample_points]
    report = NonholonomyReport(algebroid.name, algebroid.coordinates, rows)
    logger.info(f"{algebroid.name}: {report.verdict} over {len(rows)} points")
    return report
