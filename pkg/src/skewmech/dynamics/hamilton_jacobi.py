"""Hamilton-Jacobi residuals and the lift test relating them to Hamilton trajectories."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..algebroid import DualSection, ExactSection, PointLike, SkewAlgebroid, cocycle_residual
from ..expr import Expression
from ..poisson import DualPoint, ScalarOnDual
from .integrator import Trajectory, rk4_integrate
from .mechanical import MechanicalSystem, hamilton_flow

logger = logging.getLogger(__name__)

COCYCLE_TOLERANCE = 1e-6


def _lifted(algebroid: SkewAlgebroid, alpha: DualSection, q: PointLike) -> DualPoint:
    q = algebroid.point(q)
    return DualPoint(q, alpha.components_at(q))


def hj_residual(algebroid: SkewAlgebroid, h: ScalarOnDual, alpha: DualSection, q: PointLike) -> np.ndarray:
    """Components ``rho^i_gamma (dh/dq^i + d_i alpha_nu dh/dp_nu)`` at the lifted point alpha(q)."""
    x = _lifted(algebroid, alpha, q)
    gradient = h.gradient(x)
    m = algebroid.m
    dh_dq, dh_dp = gradient[:m], gradient[m:]
    return algebroid.anchor_at(x.q) @ (dh_dq + alpha.jacobian_at(x.q).T @ dh_dp)


def projected_vf(algebroid: SkewAlgebroid, h: ScalarOnDual, alpha: DualSection, q: PointLike) -> np.ndarray:
    """Base part of the Hamiltonian vector field at alpha(q): ``rho^i_gamma dh/dp_gamma``."""
    x = _lifted(algebroid, alpha, q)
    return algebroid.anchor_at(x.q).T @ h.momentum_gradient(x)


def projected_curve(
    algebroid: SkewAlgebroid,
    h: ScalarOnDual,
    alpha: DualSection,
    q0: PointLike,
    t_span: Tuple[float, float],
    dt: float,
) -> Trajectory:
    """Integral curve of the projected vector field starting at q0."""

    def rhs(t: float, q: np.ndarray) -> np.ndarray:
        return projected_vf(algebroid, h, alpha, q)

    return rk4_integrate(rhs, algebroid.point(q0), t_span, dt, layout="base", m=algebroid.m)


@dataclass(frozen=True)
class HarnessReport:
    """Both sides of the Hamilton-Jacobi equivalence measured along one curve."""

    max_lift_defect: float
    max_hj_residual: float
    max_cocycle_residual: float
    cocycle_ok: bool
    constancy_deviation: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "max_lift_defect": self.max_lift_defect,
            "max_hj_residual": self.max_hj_residual,
            "max_cocycle_residual": self.max_cocycle_residual,
            "cocycle_ok": self.cocycle_ok,
            "constancy_deviation": self.constancy_deviation,
            "samples": self.samples,
        }


def hamilton_jacobi_harness(
    algebroid: SkewAlgebroid,
    h: ScalarOnDual,
    alpha: DualSection,
    q0: PointLike,
    t_span: Tuple[float, float],
    dt: float,
    stride: int = 10,
    cocycle_tolerance: float = COCYCLE_TOLERANCE,
) -> HarnessReport:
    """Compare Hamilton trajectories with lifts of projected curves.

    Integrates the base curve c(t) of the projected field from q0 and the Hamilton flow from
    alpha(q0) with the same step, then reports the sup-norm distance between the flow and the
    lift alpha(c(t)). Hamilton-Jacobi and cocycle residuals are sampled every ``stride`` grid
    points along c; a cocycle violation is logged, not raised.
    """
    start = _lifted(algebroid, alpha, q0)
    with ThreadPoolExecutor(max_workers=2) as pool:
        curve_job = pool.submit(projected_curve, algebroid, h, alpha, start.q, t_span, dt)
        flow_job = pool.submit(hamilton_flow, algebroid, h, start, t_span, dt)
        curve = curve_job.result()
        flow = flow_job.result()

    lifts = np.array([np.concatenate([q, alpha.components_at(q)]) for q in curve.states])
    lift_defect = float(np.max(np.abs(flow.states - lifts)))
    h_start = h(start)
    constancy = max(abs(h(DualPoint(row[: algebroid.m], row[algebroid.m :])) - h_start) for row in lifts)

    indices = sorted(set(range(0, curve.times.size, max(1, stride))) | {curve.times.size - 1})
    hj = max(float(np.max(np.abs(hj_residual(algebroid, h, alpha, curve.states[i])), initial=0.0)) for i in indices)
    cocycle = max(cocycle_residual(algebroid, alpha, curve.states[i]) for i in indices)
    cocycle_ok = cocycle <= cocycle_tolerance
    if not cocycle_ok:
        logger.warning(f"Section is not a 1-cocycle along the curve (max residual {cocycle:.3g})")
    logger.info(f"Harness on {algebroid.name}: lift defect {lift_defect:.3g}, HJ residual {hj:.3g}")
    return HarnessReport(lift_defect, hj, cocycle, cocycle_ok, float(constancy), len(indices))


def gradient_flow_defect(system: MechanicalSystem, generating_function: Expression, q: PointLike) -> float:
    """Distance between the projected field of ``alpha = d^D S`` and the anchored gradient of S.

    With ``h = h_(L,D)`` and an orthonormal frame the projected field should equal
    ``rho(sharp(d^D S))``.
    """
    algebroid = system.algebroid
    alpha = ExactSection(algebroid, generating_function)
    expected = algebroid.anchor_at(q).T @ alpha.components_at(q)
    return float(np.max(np.abs(projected_vf(algebroid, system.hamiltonian(), alpha, q) - expected)))
