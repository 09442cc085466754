"""Finite differences and numeric linear algebra helpers.

All derivatives in skewmech are central differences with a step scaled as
``step * max(1, |x|)``; all rank decisions go through a relative singular value cutoff.
"""

import logging
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)

FIRST_DERIVATIVE_STEP = 1e-6
NESTED_DERIVATIVE_STEP = 1e-4
RANK_RTOL = 1e-9


def step_size(x: float, step: float = FIRST_DERIVATIVE_STEP) -> float:
    """Return the central-difference step used at coordinate value ``x``."""
    return step * max(1.0, abs(x))


def central_jacobian(
    func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = FIRST_DERIVATIVE_STEP
) -> np.ndarray:
    """Central-difference Jacobian of an array valued function.

    Args:
        func: Function mapping a 1-D array to an array of any shape
        x: Point of differentiation
        step: Relative step, scaled by ``max(1, |x_j|)`` per coordinate

    Returns:
        Array of shape ``func(x).shape + (len(x),)``; the last axis indexes the coordinates
    """
    x = np.asarray(x, dtype=float)
    columns = []
    for j in range(x.size):
        h = step_size(float(x[j]), step)
        forward = x.copy()
        backward = x.copy()
        forward[j] += h
        backward[j] -= h
        columns.append((np.asarray(func(forward), dtype=float) - np.asarray(func(backward), dtype=float)) / (2.0 * h))
    return np.stack(columns, axis=-1)


def central_gradient(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: float = FIRST_DERIVATIVE_STEP
) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    return central_jacobian(lambda y: np.asarray(func(y), dtype=float), x, step)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    """Singular values of a 2-D array, empty for empty input."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return np.zeros(0)
    return np.linalg.svd(matrix, compute_uv=False)


def numeric_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank with singular values below ``rtol * sigma_max`` treated as zero."""
    sigma = singular_values(matrix)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > rtol * sigma[0]))


def nullspace(matrix: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the right nullspace, one basis vector per column."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    cols = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(cols)
    _, sigma, vt = np.linalg.svd(matrix)
    if sigma.size == 0 or sigma[0] == 0.0:
        return np.eye(cols)
    rank = int(np.sum(sigma > rtol * sigma[0]))
    return vt[rank:].T.copy()


def normalize_columns(matrix: np.ndarray) -> np.ndarray:
    """Scale nonzero columns to unit length; zero columns are dropped."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    norms = np.linalg.norm(matrix, axis=0)
    keep = norms > 0.0
    return matrix[:, keep] / norms[keep]


def range_basis(matrix: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column span, one basis vector per column."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return np.zeros((matrix.shape[0], 0))
    left, sigma, _ = np.linalg.svd(matrix, full_matrices=False)
    if sigma[0] == 0.0:
        return np.zeros((matrix.shape[0], 0))
    return left[:, : int(np.sum(sigma > rtol * sigma[0]))]


def same_span(a: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    """Decide whether the column spans of ``a`` and ``b`` coincide.

    Both spans are reduced to orthonormal bases first; the test is then
    ``rank(a) == rank(b) == rank([a|b])``.
    """
    basis_a = range_basis(a, rtol)
    basis_b = range_basis(b, rtol)
    if basis_a.shape[1] != basis_b.shape[1]:
        logger.debug(f"Span ranks differ: {basis_a.shape[1]} vs {basis_b.shape[1]}")
        return False
    if basis_a.shape[1] == 0:
        return True
    joint = numeric_rank(np.hstack([basis_a, basis_b]), rtol)
    logger.debug(f"Span ranks: {basis_a.shape[1]}, joint={joint}")
    return joint == basis_a.shape[1]
