"""Random orbit sampling by composing short flows of the anchor fields."""

import logging
from dataclasses import dataclass
from typing import List, Union

import numpy as np

from ..algebroid import PointLike, SkewAlgebroid, d_function
from ..dynamics.integrator import rk4_integrate
from ..errors import ChartDomainError, InputError, IntegrationError, PreconditionError
from ..expr import Expression, parse

logger = logging.getLogger(__name__)

CLOSEDNESS_TOLERANCE = 1e-6


def sample_orbit(
    algebroid: SkewAlgebroid,
    q0: PointLike,
    n_steps: int,
    step_time: float,
    seed: int = 0,
    substeps: int = 10,
) -> List[np.ndarray]:
    """Follow ``n_steps`` legs, each the time ``+-step_time`` flow of a random generator field.

    Args:
        algebroid: Algebroid whose anchor fields generate the orbit
        q0: Starting base point
        n_steps: Number of legs
        step_time: Duration of each leg
        seed: Seed for ``numpy.random.default_rng``
        substeps: RK4 steps per leg

    Returns:
        The starting point followed by the endpoint of every leg

    Raises:
        IntegrationError: If a leg leaves the chart or its flow fails
    """
    if n_steps < 0 or substeps < 1 or not step_time > 0.0:
        msg = f"invalid orbit parameters n_steps={n_steps}, step_time={step_time}, substeps={substeps}"
        raise InputError(msg)
    rng = np.random.default_rng(seed)
    point = algebroid.check_point(q0)
    points = [point.copy()]
    dt = step_time / substeps
    for leg in range(n_steps):
        alpha = int(rng.integers(algebroid.n))
        sign = 1.0 if rng.random() < 0.5 else -1.0

        def rhs(t: float, q: np.ndarray, alpha: int = alpha, sign: float = sign) -> np.ndarray:
            return sign * algebroid.anchor_at(q)[alpha]

        trajectory = rk4_integrate(rhs, point, (0.0, step_time), dt, layout="base", m=algebroid.m)
        point = trajectory.final_state
        try:
            algebroid.check_point(point)
        except ChartDomainError as e:
            msg = f"orbit leg {leg} along {algebroid.frame[alpha]} left the chart: {e}"
            raise IntegrationError(msg, step_time * (leg + 1)) from e
        points.append(point.copy())
    logger.debug(f"{algebroid.name}: sampled {len(points)} orbit points from {points[0].tolist()}")
    return points


@dataclass
class OrbitConstancy:
    """Spread of a function over sampled orbit points."""

    max_deviation: float
    points: List[np.ndarray]
    max_closedness_residual: float


def constancy_on_orbit(
    algebroid: SkewAlgebroid,
    f: Union[Expression, str],
    q0: PointLike,
    n_steps: int = 200,
    step_time: float = 0.05,
    seed: int = 0,
    tolerance: float = CLOSEDNESS_TOLERANCE,
) -> OrbitConstancy:
    """Measure ``max |f(q) - f(q0)|`` along a sampled orbit.

    Raises:
        PreconditionError: If d^D f does not vanish at some orbit point
    """
    expression = parse(f) if isinstance(f, str) else f
    points = sample_orbit(algebroid, q0, n_steps, step_time, seed)
    closedness = 0.0
    for q in points:
        residual = float(np.max(np.abs(d_function(algebroid, expression, q)), initial=0.0))
        closedness = max(closedness, residual)
        if residual > tolerance:
            msg = f"d^D f does not vanish on the orbit: |d^D f| = {residual:.3e} at {q.tolist()}"
            raise PreconditionError(msg)
    reference = expression.evaluate(algebroid.binding(points[0]))
    deviation = max(abs(expression.evaluate(algebroid.binding(q)) - reference) for q in points)
    return OrbitConstancy(float(deviation), points, closedness)
