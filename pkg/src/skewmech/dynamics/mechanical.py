"""Mechanical systems on algebroids and their flows.

In an orthonormal frame the kinetic energy is ``1/2 sum (v^gamma)^2`` and the Legendre map is
the identity on components, so ``h_(L,D)(q, p) = 1/2 sum p_gamma^2 + V(q)``.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..algebroid import SkewAlgebroid, as_array, base_gradient
from ..errors import InputError, PreconditionError
from ..expr import ZERO, BinaryOp, Expression, Number, Variable, free_variables
from ..poisson import DualPoint, ScalarOnDual, hamiltonian_vf, momentum_names
from .integrator import Trajectory, rk4_integrate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VelocityPoint:
    """Point of the algebroid: base coordinates q and frame velocities v."""

    q: np.ndarray
    v: np.ndarray

    @classmethod
    def of(cls, q: Sequence[float], v: Sequence[float]) -> "VelocityPoint":
        return cls(as_array(q), np.array(v, dtype=float).reshape(-1))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])


class MechanicalSystem:
    """Lagrangian of mechanical type ``L(v) = 1/2 |v|^2 - V(q)`` in an orthonormal frame."""

    def __init__(self, algebroid: SkewAlgebroid, potential: Optional[Expression] = None, name: str = ""):
        """Initialize the system.

        Args:
            algebroid: Algebroid carrying the frame velocities
            potential: Potential V in base coordinates and parameters; zero when omitted
            name: Label for reports
        """
        self.algebroid = algebroid
        self.potential = potential if potential is not None else ZERO
        self.name = name or algebroid.name
        unknown = free_variables(self.potential) - set(algebroid.coordinates) - set(algebroid.parameters)
        if unknown:
            msg = f"potential of '{self.name}' uses unknown names {sorted(unknown)}"
            raise InputError(msg)

    def potential_at(self, q: Sequence[float]) -> float:
        return self.potential.evaluate(self.algebroid.binding(q))

    def potential_gradient(self, q: Sequence[float]) -> np.ndarray:
        return base_gradient(self.algebroid, self.potential, q)

    def energy(self, x: Union[VelocityPoint, np.ndarray]) -> float:
        """Energy ``E_L = 1/2 |v|^2 + V(q)`` of a velocity (or dual) state."""
        state = x.as_array() if isinstance(x, VelocityPoint) else np.asarray(x, dtype=float)
        m = self.algebroid.m
        return 0.5 * float(state[m:] @ state[m:]) + self.potential_at(state[:m])

    def hamiltonian(self) -> ScalarOnDual:
        """``h_(L,D) = 1/2 (p1^2 + ... + pn^2) + V`` as a function on D*."""
        squares: Expression = ZERO
        for index, name in enumerate(momentum_names(self.algebroid)):
            square = BinaryOp("^", Variable(name), Number(2.0))
            squares = square if index == 0 else BinaryOp("+", squares, square)
        kinetic = BinaryOp("*", Number(0.5), squares)
        expression = kinetic if self.potential == ZERO else BinaryOp("+", kinetic, self.potential)
        return ScalarOnDual(self.algebroid, expression, f"h[{self.name}]")

    def velocity_field(self, t: float, x: np.ndarray) -> np.ndarray:
        """``dq^i/dt = rho^i_B v^B``, ``dv^E/dt = -C^C_{EB} v^B v^C - rho^j_E dV/dq^j``."""
        m = self.algebroid.m
        q, v = x[:m], x[m:]
        anchor = self.algebroid.anchor_at(q)
        structure = self.algebroid.structure_at(q)
        q_dot = anchor.T @ v
        v_dot = -quadratic_term(structure, v)
        if self.potential != ZERO:
            v_dot = v_dot - anchor @ self.potential_gradient(q)
        return np.concatenate([q_dot, v_dot])


def quadratic_term(structure: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``sum_{B,C} C^C_{EB} v^B v^C`` for every E, as printed in the Euler-Lagrange equations."""
    return np.einsum("ebc,b,c->e", structure, v, v)


def christoffel_symbols(structure: np.ndarray) -> np.ndarray:
    """``Gamma^E_{BC} = 1/2 (C^C_{EB} + C^B_{EC} + C^E_{BC})`` stored as ``[E, B, C]``."""
    return 0.5 * (structure + structure.transpose(0, 2, 1) + np.einsum("bce->ebc", structure))


def hamilton_flow(
    algebroid: SkewAlgebroid,
    h: ScalarOnDual,
    x0: Union[DualPoint, np.ndarray],
    t_span: Tuple[float, float],
    dt: float,
) -> Trajectory:
    """Integrate the Hamilton equations of h from x0."""
    start = x0.as_array() if isinstance(x0, DualPoint) else np.asarray(x0, dtype=float)
    m = algebroid.m

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return hamiltonian_vf(algebroid, h, DualPoint(x[:m], x[m:]))

    return rk4_integrate(rhs, start, t_span, dt, layout="dual", m=m)


def _velocity_start(system: MechanicalSystem, x0: Union[VelocityPoint, np.ndarray]) -> np.ndarray:
    start = x0.as_array() if isinstance(x0, VelocityPoint) else np.asarray(x0, dtype=float)
    expected = system.algebroid.m + system.algebroid.n
    if start.size != expected:
        msg = f"{system.name}: velocity state needs {expected} values, got {start.size}"
        raise InputError(msg)
    return start


def geodesic_el_flow(
    system: MechanicalSystem, x0: Union[VelocityPoint, np.ndarray], t_span: Tuple[float, float], dt: float
) -> Trajectory:
    """Integrate the Euler-Lagrange equations of a mechanical system."""
    start = _velocity_start(system, x0)
    return rk4_integrate(system.velocity_field, start, t_span, dt, layout="velocity", m=system.algebroid.m)


def nonholonomic_flow(
    system: MechanicalSystem, x0: Union[VelocityPoint, np.ndarray], t_span: Tuple[float, float], dt: float
) -> Trajectory:
    """Integrate the Lagrange-D'Alembert equations on a constraint algebroid D.

    Raises:
        PreconditionError: If the system's algebroid is not a constraint algebroid
    """
    if not system.algebroid.constrained:
        msg = f"{system.algebroid.name} is not a constraint algebroid; restrict an ambient frame first"
        raise PreconditionError(msg)
    start = _velocity_start(system, x0)
    return rk4_integrate(system.velocity_field, start, t_span, dt, layout="velocity", m=system.algebroid.m)


def energy_drift(system: MechanicalSystem, trajectory: Trajectory, h: Optional[ScalarOnDual] = None) -> float:
    """Largest ``|E(t) - E(t0)|`` along a trajectory (h for dual layouts when given)."""
    if h is not None and trajectory.layout == "dual":
        m = system.algebroid.m
        values = np.array([h(DualPoint(row[:m], row[m:])) for row in trajectory.states])
    else:
        values = np.array([system.energy(row) for row in trajectory.states])
    return float(np.max(np.abs(values - values[0])))
