"""Constrained algebroid D obtained from an ambient adapted orthonormal frame."""

import logging
from typing import Optional

from ..errors import InputError
from .structure import ExpressionAlgebroid, RestrictedAlgebroid, SkewAlgebroid

logger = logging.getLogger(__name__)


def restrict_constrained(ambient: SkewAlgebroid, constrained_rank: Optional[int] = None) -> SkewAlgebroid:
    """Restrict an ambient algebroid to the span D of its leading frame labels.

    In an orthonormal adapted frame the orthogonal projection onto D keeps the D-components of
    brackets, so the structure functions are the ambient ones with all indices in D and the
    anchor rows are the ambient rows of the D labels.

    Args:
        ambient: Algebroid whose frame is split as D labels followed by D-perp labels
        constrained_rank: Number of D labels; defaults to the ambient's own split

    Returns:
        The algebroid on D; an ExpressionAlgebroid when the ambient stores expressions

    Raises:
        InputError: If the split sizes are inconsistent
    """
    rank = ambient.constrained_rank if constrained_rank is None else constrained_rank
    if rank is None or not 0 < rank <= ambient.n:
        msg = f"{ambient.name}: constrained rank {rank} inconsistent with bundle rank {ambient.n}"
        raise InputError(msg)
    name = f"{ambient.name}|D"
    logger.info(f"Restricting {ambient.name} to its first {rank} of {ambient.n} frame labels")
    if isinstance(ambient, ExpressionAlgebroid):
        structure = {key: e for key, e in ambient.structure.items() if max(key) < rank}
        return ExpressionAlgebroid(
            name,
            ambient.coordinates,
            ambient.frame[:rank],
            ambient.anchor[:rank],
            structure,
            ambient.parameters,
            chart_domain=ambient.chart_domain,
            constrained=True,
        )
    return RestrictedAlgebroid(ambient, rank, name)
