"""Recovering anchor and structure functions from a linear bracket on D*."""

import logging
from typing import Callable, NamedTuple, Optional

import numpy as np

from ..errors import ConsistencyError
from .structure import PointLike, as_array

logger = logging.getLogger(__name__)

# (a, b, q, p) -> {x^a, x^b}(q, p) where x^0..x^{m-1} are the q^i and x^m..x^{m+n-1} the p_alpha
CoordinateBracket = Callable[[int, int, np.ndarray, np.ndarray], float]

LINEARITY_TOLERANCE = 1e-6


class ExtractedStructure(NamedTuple):
    """Anchor (n, m) and structure functions (n, n, n) recovered at one base point."""

    anchor: np.ndarray
    structure: np.ndarray


def extract_structure(
    bracket: CoordinateBracket,
    m: int,
    n: int,
    q: PointLike,
    rng: Optional[np.random.Generator] = None,
) -> ExtractedStructure:
    """Read rho and C off a bracket of coordinate functions.

    ``rho^j_alpha = {q^j, p_alpha}`` and ``C^gamma_{alpha beta} = -{p_alpha, p_beta}`` at the
    unit fiber point ``p = e_gamma``. The same values are recomputed at a random fiber point to
    confirm the bracket is linear.

    Raises:
        ConsistencyError: If the bracket is not linear in the fibers
    """
    q = as_array(q)
    rng = rng or np.random.default_rng(0)
    zero = np.zeros(n)
    anchor = np.array([[bracket(j, m + alpha, q, zero) for j in range(m)] for alpha in range(n)])
    structure = np.zeros((n, n, n))
    for gamma in range(n):
        unit = np.zeros(n)
        unit[gamma] = 1.0
        for alpha in range(n):
            for beta in range(n):
                structure[alpha, beta, gamma] = -bracket(m + alpha, m + beta, q, unit)

    momenta = rng.normal(size=n)
    worst = 0.0
    for alpha in range(n):
        for j in range(m):
            worst = max(worst, abs(bracket(j, m + alpha, q, momenta) - anchor[alpha, j]))
        for beta in range(n):
            expected = -structure[alpha, beta] @ momenta
            worst = max(worst, abs(bracket(m + alpha, m + beta, q, momenta) - expected))
            worst = max(worst, abs(bracket(m + alpha, m + beta, q, zero)))
    for i in range(m):
        for j in range(m):
            worst = max(worst, abs(bracket(i, j, q, momenta)))
    if worst > LINEARITY_TOLERANCE:
        msg = f"bracket is not linear: recovered values vary by {worst:.3g} across fiber points"
        raise ConsistencyError(msg)
    logger.debug(f"Extracted structure at q={q.tolist()} (linearity defect {worst:.3g})")
    return ExtractedStructure(anchor, structure)
