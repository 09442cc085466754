"""Run configuration for the command-line interface.

Values are resolved per command with the precedence built-in defaults < ``--config`` file <
explicit flags.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "simulate": {"flow": "hamilton", "t0": 0.0, "t": 5.0, "dt": 1e-3, "tol": 1e-8},
    "check": {"t0": 0.0, "t": 5.0, "dt": 1e-3, "tol": 1e-6, "samples": 20, "seed": 0},
    "analyze": {"samples": 20, "seed": 0},
    "morphism": {"grid": 30, "seed": 0, "tol": 1e-6},
    "bracket-table": {},
    "models": {},
}


def parse_assignments(values: Union[None, str, Sequence[str]], what: str = "assignment") -> Dict[str, float]:
    """Parse ``"a=1,b=2"`` (or a list of such strings) into a name-to-float mapping.

    Raises:
        ConfigError: On a malformed item, a non-numeric value or a repeated name
    """
    if values is None:
        return {}
    items: List[str] = []
    for value in [values] if isinstance(values, str) else values:
        items.extend(part.strip() for part in value.split(",") if part.strip())
    result: Dict[str, float] = {}
    for item in items:
        name, sep, text = item.partition("=")
        name = name.strip()
        if not sep or not name:
            msg = f"malformed {what} '{item}', expected name=value"
            raise ConfigError(msg)
        try:
            number = float(text)
        except ValueError as e:
            msg = f"{what} '{name}' needs a number, got '{text.strip()}'"
            raise ConfigError(msg) from e
        if name in result:
            msg = f"{what} '{name}' given twice"
            raise ConfigError(msg)
        result[name] = number
    return result


def parse_point_list(text: Optional[str]) -> List[Dict[str, float]]:
    """Parse ``"x=1,y=0;x=1,y=1"`` into a list of assignments."""
    if not text:
        return []
    return [parse_assignments(chunk, "point coordinate") for chunk in text.split(";") if chunk.strip()]


def load_defaults(path: Optional[Union[str, Path]]) -> Dict[str, Dict[str, Any]]:
    """Read per-command defaults from a YAML file (``{simulate: {dt: 0.001}, ...}``).

    Raises:
        ConfigError: If the file is missing, unreadable or not a mapping of mappings
    """
    if path is None:
        return {}
    path = Path(path)
    try:
        with path.open() as f:
            document = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        msg = f"cannot read config file {path}: {e}"
        raise ConfigError(msg) from e
    if not isinstance(document, dict) or not all(isinstance(v, dict) for v in document.values()):
        msg = f"config file {path} must map command names to option mappings"
        raise ConfigError(msg)
    unknown = set(document) - set(COMMAND_DEFAULTS)
    if unknown:
        msg = f"config file {path} names unknown commands {sorted(unknown)}"
        raise ConfigError(msg)
    logger.debug(f"Loaded run defaults for {sorted(document)} from {path}")
    return {str(k): dict(v) for k, v in document.items()}


@dataclass
class RunConfig:
    """Resolved options of one CLI invocation."""

    command: str
    model: Optional[str] = None
    parameters: Dict[str, float] = field(default_factory=dict)
    t0: float = 0.0
    t_end: float = 5.0
    dt: float = 1e-3
    seed: int = 0
    samples: int = 20
    grid: int = 30
    tol: Optional[float] = None
    flow: str = "hamilton"
    x0: Dict[str, float] = field(default_factory=dict)
    hamiltonian: Optional[str] = None
    section: Optional[str] = None
    constants: Dict[str, float] = field(default_factory=dict)
    perturb: List[str] = field(default_factory=list)
    q0: Dict[str, float] = field(default_factory=dict)
    point: Dict[str, float] = field(default_factory=dict)
    momenta: Dict[str, float] = field(default_factory=dict)
    points: List[Dict[str, float]] = field(default_factory=list)
    max_depth: Optional[int] = None
    identity: bool = False
    scale_row: Optional[int] = None
    output: Optional[Path] = None

    def validate(self) -> "RunConfig":
        """Check invariants shared by every command.

        Raises:
            ConfigError: If a numeric option is out of range
        """
        if not (math.isfinite(self.t0) and math.isfinite(self.t_end)):
            msg = f"time span must be finite, got ({self.t0}, {self.t_end})"
            raise ConfigError(msg)
        if self.t_end < self.t0:
            msg = f"end time {self.t_end} precedes start time {self.t0}"
            raise ConfigError(msg)
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            msg = f"--dt must be positive, got {self.dt}"
            raise ConfigError(msg)
        if self.samples < 1 or self.grid < 1:
            msg = "sample and grid counts must be at least 1"
            raise ConfigError(msg)
        if self.tol is not None and not self.tol > 0.0:
            msg = f"--tol must be positive, got {self.tol}"
            raise ConfigError(msg)
        if self.max_depth is not None and self.max_depth < 1:
            msg = f"--max-depth must be at least 1, got {self.max_depth}"
            raise ConfigError(msg)
        return self

    @classmethod
    def from_options(
        cls, command: str, options: Mapping[str, Any], defaults: Optional[Mapping[str, Mapping[str, Any]]] = None
    ) -> "RunConfig":
        """Build a config from parsed flags, filling unset (None) flags from file and built-in defaults.

        Args:
            command: Subcommand name
            options: Parsed flags (e.g. ``vars(namespace)``)
            defaults: Per-command defaults read from a config file

        Returns:
            Validated RunConfig

        Raises:
            ConfigError: On malformed values
        """
        merged: Dict[str, Any] = dict(COMMAND_DEFAULTS.get(command, {}))
        merged.update((defaults or {}).get(command, {}))
        merged.update({k: v for k, v in options.items() if v is not None})

        def number(key: str, fallback: Any, kind: type = float) -> Any:
            value = merged.get(key, fallback)
            if value is None:
                return None
            try:
                return kind(value)
            except (TypeError, ValueError) as e:
                msg = f"option '{key}' needs a {kind.__name__}, got {value!r}"
                raise ConfigError(msg) from e

        perturb = merged.get("perturb") or []
        output = merged.get("output")
        config = cls(
            command=command,
            model=merged.get("model"),
            parameters=parse_assignments(merged.get("param"), "parameter"),
            t0=number("t0", 0.0),
            t_end=number("t", 5.0),
            dt=number("dt", 1e-3),
            seed=number("seed", 0, int),
            samples=number("samples", 20, int),
            grid=number("grid", 30, int),
            tol=number("tol", None),
            flow=str(merged.get("flow", "hamilton")),
            x0=parse_assignments(merged.get("x0"), "initial value"),
            hamiltonian=merged.get("h"),
            section=merged.get("section"),
            constants=parse_assignments(merged.get("const"), "constant"),
            perturb=[perturb] if isinstance(perturb, str) else list(perturb),
            q0=parse_assignments(merged.get("q0"), "base coordinate"),
            point=parse_assignments(merged.get("point"), "base coordinate"),
            momenta=parse_assignments(merged.get("momenta"), "momentum"),
            points=parse_point_list(merged.get("points")),
            max_depth=number("max_depth", None, int),
            identity=bool(merged.get("identity", False)),
            scale_row=number("scale_row", None, int),
            output=Path(output) if output else None,
        )
        return config.validate()
