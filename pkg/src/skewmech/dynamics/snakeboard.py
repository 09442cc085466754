"""Closed-form integral curves of the reduced snakeboard Hamilton-Jacobi family."""

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from ..errors import DomainError, InputError

logger = logging.getLogger(__name__)

LINEAR_BRANCH_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SnakeboardSolution:
    """Angles and frame velocities of the analytic solution on a time grid."""

    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray


def closed_form_snakeboard(
    params: Mapping[str, float], constants: Sequence[float], t: Union[float, Sequence[float], np.ndarray]
) -> SnakeboardSolution:
    """Evaluate the analytic snakeboard solution.

    ``phi = C0 t + C3``; for ``C0 != 0``
    ``psi = C1 t - (C2/C0) log[sqrt(2) (sqrt(J0) cos(phi) + sqrt(m r^2 - J0 sin^2 phi))] + C4``,
    and for ``C0 = 0`` psi is linear in t. The companion velocities are the section components
    along the curve.

    Args:
        params: Model parameters J0, J1, m, r
        constants: C0, C1, C2, C3, C4
        t: Time or times

    Raises:
        InputError: On missing or non-positive parameters
        DomainError: If ``m r^2 - J0 sin^2 phi`` becomes negative
    """
    try:
        j0, j1, mass, radius = (float(params[name]) for name in ("J0", "J1", "m", "r"))
    except KeyError as e:
        msg = f"snakeboard parameter {e} missing"
        raise InputError(msg) from e
    if min(j0, j1, mass, radius) <= 0.0:
        msg = "snakeboard parameters must be positive"
        raise InputError(msg)
    if len(constants) != 5:
        msg = f"expected constants C0..C4, got {len(constants)} values"
        raise InputError(msg)
    c0, c1, c2, c3, c4 = (float(c) for c in constants)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    phi = c0 * times + c3
    radicand = mass * radius**2 - j0 * np.sin(phi) ** 2
    if np.any(radicand < 0.0):
        msg = "m r^2 - J0 sin^2(phi) is negative"
        raise DomainError(msg)
    root = np.sqrt(radicand)
    if abs(c0) > LINEAR_BRANCH_THRESHOLD:
        argument = math.sqrt(2.0) * (math.sqrt(j0) * np.cos(phi) + root)
        if np.any(argument <= 0.0):
            msg = "logarithm argument is not positive"
            raise DomainError(msg)
        psi = c1 * times - (c2 / c0) * np.log(argument) + c4
    else:
        psi = c1 * times + math.sqrt(j0) * c2 * times * math.sin(c3) / math.sqrt(radicand[0]) + c4
    f = j0 - j0**2 * np.sin(phi) ** 2 / (mass * radius**2)
    coupling = j0 / (radius * math.sqrt(mass)) * np.sin(phi)
    v1 = np.full_like(times, math.sqrt(2.0 * j1) * c0)
    v2 = c1 * np.sqrt(f) + c2 * coupling
    v3 = c1 * coupling - c2 * np.sqrt(f)
    return SnakeboardSolution(times, phi, psi, v1, v2, v3)
