"""Fixed-step classical Runge-Kutta integration and trajectory export."""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Sequence, TextIO, Tuple, Union

import numpy as np

from ..errors import InputError, IntegrationError, SkewMechError

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

LAYOUT_PREFIX = {"dual": "p", "velocity": "v", "base": "", "state": "x"}


@dataclass
class Trajectory:
    """States on a time grid.

    ``layout`` labels the fiber columns: ``dual`` (momenta p), ``velocity`` (frame velocities v),
    ``base`` (base curve only) or ``state`` (generic state vector).
    """

    times: np.ndarray
    states: np.ndarray
    layout: str = "state"
    m: int = 0

    def __post_init__(self) -> None:
        if self.layout not in LAYOUT_PREFIX:
            msg = f"unknown trajectory layout '{self.layout}'"
            raise InputError(msg)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.size:
            msg = "trajectory needs one state row per time"
            raise InputError(msg)
        if np.any(np.diff(self.times) <= 0.0):
            msg = "trajectory times must increase"
            raise InputError(msg)

    @property
    def width(self) -> int:
        return int(self.states.shape[1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def header(self) -> List[str]:
        """CSV header ``t,q1..qm,s1..sn`` where s is p or v per layout."""
        if self.layout == "state":
            return ["t"] + [f"x{k + 1}" for k in range(self.width)]
        prefix = LAYOUT_PREFIX[self.layout]
        fiber = self.width - self.m
        return ["t"] + [f"q{i + 1}" for i in range(self.m)] + [f"{prefix}{k + 1}" for k in range(fiber)]

    def column(self, name: str) -> np.ndarray:
        header = self.header()
        if name not in header:
            msg = f"no column '{name}' in trajectory"
            raise InputError(msg)
        index = header.index(name)
        return self.times.copy() if index == 0 else self.states[:, index - 1].copy()

    def to_csv(self, stream: TextIO) -> None:
        """Write the trajectory as CSV with 17 significant digits."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.header())
        for t, row in zip(self.times, self.states):
            writer.writerow([format(float(t), ".17g")] + [format(float(v), ".17g") for v in row])

    def write_csv(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with path.open("w", newline="") as f:
            self.to_csv(f)
        logger.info(f"Wrote {self.times.size} trajectory rows to {path}")


def time_grid(t_span: Tuple[float, float], dt: float) -> np.ndarray:
    """Uniform grid of step dt; the final step is shortened to land on the end time."""
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 < t0:
        msg = f"invalid time span ({t0}, {t1})"
        raise InputError(msg)
    if not dt > 0.0:
        msg = f"time step must be positive, got {dt}"
        raise InputError(msg)
    span = t1 - t0
    steps = int(math.floor(span / dt + 1e-9))
    times = t0 + dt * np.arange(steps + 1)
    if span - steps * dt > 1e-12 * max(1.0, abs(span)):
        times = np.append(times, t1)
    elif steps > 0:
        times[-1] = t1
    return times


def rk4_integrate(
    rhs: Rhs,
    x0: Union[Sequence[float], np.ndarray],
    t_span: Tuple[float, float],
    dt: float,
    layout: str = "state",
    m: int = 0,
) -> Trajectory:
    """Integrate ``dx/dt = rhs(t, x)`` with the classical fixed-step RK4 scheme.

    Args:
        rhs: State derivative evaluator
        x0: Initial state
        t_span: (t_start, t_end)
        dt: Step size
        layout: Trajectory layout label
        m: Number of base coordinates in the state (for CSV headers)

    Returns:
        Trajectory on the uniform grid

    Raises:
        IntegrationError: If rhs fails or the state stops being finite
    """
    times = time_grid(t_span, dt)
    state = np.array(x0, dtype=float).reshape(-1)
    states = np.empty((times.size, state.size))
    states[0] = state

    def derivative(t: float, x: np.ndarray) -> np.ndarray:
        try:
            value = np.asarray(rhs(t, x), dtype=float)
        except (SkewMechError, ArithmeticError, ValueError) as e:
            msg = f"right-hand side failed: {e}"
            raise IntegrationError(msg, t) from e
        if not np.all(np.isfinite(value)):
            msg = "right-hand side is not finite"
            raise IntegrationError(msg, t)
        return value

    for k in range(times.size - 1):
        t = float(times[k])
        h = float(times[k + 1] - times[k])
        k1 = derivative(t, state)
        k2 = derivative(t + 0.5 * h, state + 0.5 * h * k1)
        k3 = derivative(t + 0.5 * h, state + 0.5 * h * k2)
        k4 = derivative(t + h, state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(state)):
            msg = "state is not finite"
            raise IntegrationError(msg, float(times[k + 1]))
        states[k + 1] = state
    logger.debug(f"RK4: {times.size - 1} steps over [{times[0]}, {times[-1]}]")
    return Trajectory(times, states, layout, m)
