"""Numerical differentiation of expressions by central differences."""

from typing import Dict

from ..errors import UnboundVariableError
from ..numerics import FIRST_DERIVATIVE_STEP, NESTED_DERIVATIVE_STEP, step_size
from .nodes import Expression, VarBinding

SECOND_DERIVATIVE_STEP = NESTED_DERIVATIVE_STEP


def _shifted(b: VarBinding, var: str, delta: float) -> Dict[str, float]:
    shifted = dict(b)
    shifted[var] = shifted[var] + delta
    return shifted


def _require(var: str, b: VarBinding) -> float:
    if var not in b:
        msg = f"cannot differentiate with respect to unbound variable '{var}'"
        raise UnboundVariableError(msg)
    return float(b[var])


def partial(e: Expression, var: str, b: VarBinding) -> float:
    """First partial derivative ``(e(x+h) - e(x-h)) / 2h`` with ``h = 1e-6*max(1,|x|)``."""
    h = step_size(_require(var, b), FIRST_DERIVATIVE_STEP)
    return (e.evaluate(_shifted(b, var, h)) - e.evaluate(_shifted(b, var, -h))) / (2.0 * h)


def second_partial(e: Expression, u: str, v: str, b: VarBinding) -> float:
    """Second partial derivative by central second differences (step ``1e-4*max(1,|x|)``)."""
    hu = step_size(_require(u, b), SECOND_DERIVATIVE_STEP)
    if u == v:
        center = e.evaluate(b)
        forward = e.evaluate(_shifted(b, u, hu))
        backward = e.evaluate(_shifted(b, u, -hu))
        return (forward - 2.0 * center + backward) / (hu * hu)
    hv = step_size(_require(v, b), SECOND_DERIVATIVE_STEP)

    def at(du: float, dv: float) -> float:
        return e.evaluate(_shifted(_shifted(b, u, du), v, dv))

    return (at(hu, hv) - at(hu, -hv) - at(-hu, hv) + at(-hu, -hv)) / (4.0 * hu * hv)
