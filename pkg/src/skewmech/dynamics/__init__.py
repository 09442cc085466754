"""Time integration of Hamilton, Euler-Lagrange and Lagrange-D'Alembert flows, and HJ checks."""

from .hamilton_jacobi import (
    HarnessReport,
    gradient_flow_defect,
    hamilton_jacobi_harness,
    hj_residual,
    projected_curve,
    projected_vf,
)
from .integrator import Trajectory, rk4_integrate, time_grid
from .mechanical import (
    MechanicalSystem,
    VelocityPoint,
    christoffel_symbols,
    energy_drift,
    geodesic_el_flow,
    hamilton_flow,
    nonholonomic_flow,
    quadratic_term,
)
from .snakeboard import SnakeboardSolution, closed_form_snakeboard

__all__ = [
    "HarnessReport",
    "MechanicalSystem",
    "SnakeboardSolution",
    "Trajectory",
    "VelocityPoint",
    "christoffel_symbols",
    "closed_form_snakeboard",
    "energy_drift",
    "geodesic_el_flow",
    "gradient_flow_defect",
    "hamilton_flow",
    "hamilton_jacobi_harness",
    "hj_residual",
    "nonholonomic_flow",
    "projected_curve",
    "projected_vf",
    "quadratic_term",
    "rk4_integrate",
    "time_grid",
]
