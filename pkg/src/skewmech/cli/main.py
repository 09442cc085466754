"""Command-line interface for skewmech.

Every verification and simulation is a batch run with CSV or text output. Exit codes are
stable across commands: 0 pass, 1 tolerance failure, 2 invalid input, 3 numerical failure.
"""

import argparse
import json
import logging
import re
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

import numpy as np

from ..algebroid import Section1Form, SkewAlgebroid, cocycle_residual
from ..config import RunConfig, load_defaults
from ..dynamics import (
    MechanicalSystem,
    energy_drift,
    geodesic_el_flow,
    hamilton_flow,
    hamilton_jacobi_harness,
    hj_residual,
    nonholonomic_flow,
)
from ..errors import InputError, NumericalError
from ..expr import parse
from ..models import LoadedModel, ModelLoader
from ..morphism import (
    check_hamiltonian_morphism,
    check_lap_morphism,
    identity_morphism,
    scale_fiber_row,
    transfer_hj,
)
from ..nonholonomy import verdict
from ..poisson import DualPoint, ScalarOnDual, lambda_matrix, momentum_names

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

FLOWS = ("hamilton", "lagrange", "nonholonomic")
DRIFT_WINDOW = 5.0
PERTURBATION = re.compile(r"^\s*alpha(\d+)\s*([*+])=\s*(.+?)\s*$")


class SkewMechCLI:
    """Command-line interface for simulations and checks on skew-symmetric algebroids."""

    def __init__(self, search_paths: Optional[Sequence[Path]] = None):
        """Initialize the CLI.

        Args:
            search_paths: Extra model directories searched before the environment and bundled ones
        """
        self.search_paths: List[Path] = list(search_paths or [])
        self.loader = ModelLoader(self.search_paths)
        self.defaults: Dict[str, Dict[str, Any]] = {}
        self.json = False

    def create_parser(self) -> argparse.ArgumentParser:
        """Create the argument parser.

        Numeric options default to None so that config-file values can fill them in.

        Returns:
            Configured argument parser
        """
        parser = argparse.ArgumentParser(
            prog="skewmech",
            description="Mechanics on skew-symmetric algebroids",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

        # Global options
        parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
        parser.add_argument("--model-path", type=Path, action="append", help="Additional model directory")
        parser.add_argument("--config", type=Path, help="YAML file with per-command defaults")
        parser.add_argument("--json", action="store_true", help="Print reports as JSON")

        subparsers = parser.add_subparsers(dest="command", help="Available commands")

        # Simulate
        simulate_parser = subparsers.add_parser("simulate", help="Integrate a flow and write a trajectory CSV")
        self._add_model_options(simulate_parser)
        simulate_parser.add_argument("--flow", choices=FLOWS, help="Equations to integrate (default: hamilton)")
        simulate_parser.add_argument(
            "--x0", required=True, help="Initial state, e.g. 'phi=0.3,psi=0,v1=1' (p# for hamilton, v# otherwise)"
        )
        simulate_parser.add_argument("--h", help="Hamiltonian expression (default: the model's mechanical h)")
        self._add_time_options(simulate_parser)
        simulate_parser.add_argument("--output", "-o", type=Path, help="CSV path (default: standard output)")
        simulate_parser.add_argument("--tol", type=float, help="Energy drift tolerance per 5 time units")

        # Check
        check_parser = subparsers.add_parser("check", help="Check a Hamilton-Jacobi candidate section")
        self._add_model_options(check_parser)
        check_parser.add_argument("--section", required=True, help="Section name in the model")
        check_parser.add_argument("--const", action="append", help="Family constants, e.g. 'C0=1,C1=0.5'")
        check_parser.add_argument(
            "--perturb", action="append", help="Perturb a component: 'alphaK*=c' or 'alphaK+=expr' (1-based K)"
        )
        check_parser.add_argument("--q0", help="Start of the harness curve (default: model reference point)")
        check_parser.add_argument("--samples", type=int, help="Random base points for residuals")
        check_parser.add_argument("--seed", type=int, help="Random seed")
        self._add_time_options(check_parser)
        check_parser.add_argument("--tol", type=float, help="Pass tolerance (default: 1e-6)")

        # Analyze
        analyze_parser = subparsers.add_parser("analyze", help="Bracket-generated rank and nonholonomy verdict")
        self._add_model_options(analyze_parser)
        analyze_parser.add_argument("--samples", type=int, help="Random base points")
        analyze_parser.add_argument("--seed", type=int, help="Random seed")
        analyze_parser.add_argument("--points", help="Explicit points, e.g. 'x=1,y=0;x=1,y=1'")
        analyze_parser.add_argument("--max-depth", type=int, help="Deepest iterated bracket (default: 2m)")
        analyze_parser.add_argument("--output", "-o", type=Path, help="Also write the rank table as CSV")

        # Morphism
        morphism_parser = subparsers.add_parser("morphism", help="Check a bundle morphism and transfer HJ solutions")
        self._add_model_options(morphism_parser)
        morphism_parser.add_argument("--grid", type=int, help="Random base points")
        morphism_parser.add_argument("--seed", type=int, help="Random seed")
        morphism_parser.add_argument("--identity", action="store_true", help="Check the identity morphism instead")
        morphism_parser.add_argument("--scale-row", type=int, help="Double fiber-map row K (1-based)")
        morphism_parser.add_argument("--section", help="Target section to transfer (default: the first one)")
        morphism_parser.add_argument("--const", action="append", help="Constants of the target section")
        morphism_parser.add_argument("--tol", type=float, help="Pass tolerance (default: 1e-6)")

        # Bracket table
        table_parser = subparsers.add_parser("bracket-table", help="Print the bracket of coordinate functions")
        self._add_model_options(table_parser)
        table_parser.add_argument("--point", help="Base point (default: model reference point)")
        table_parser.add_argument("--momenta", help="Momenta, e.g. 'p1=1,p2=0' (default: all 1)")

        # Models
        subparsers.add_parser("models", help="List models on the search path")

        return parser

    @staticmethod
    def _add_model_options(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--model", "-m", required=True, help="Model name or file path")
        parser.add_argument("--param", action="append", help="Parameter overrides, e.g. 'J0=0.4,m=2'")

    @staticmethod
    def _add_time_options(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--t0", type=float, help="Start time (default: 0)")
        parser.add_argument("--t", type=float, help="End time (default: 5)")
        parser.add_argument("--dt", type=float, help="Step size (default: 1e-3)")

    def run(self, args: Optional[List[str]] = None) -> int:
        """Run the CLI with the given arguments.

        Args:
            args: Command line arguments (defaults to sys.argv)

        Returns:
            Exit code
        """
        parser = self.create_parser()
        try:
            parsed_args = parser.parse_args(args)
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else EXIT_INPUT

        # Configure logging
        if parsed_args.verbose:
            logging.basicConfig(level=logging.DEBUG)
        else:
            logging.basicConfig(level=logging.INFO)

        if not parsed_args.command:
            parser.print_help()
            return EXIT_INPUT

        self.json = parsed_args.json
        if parsed_args.model_path:
            self.loader = ModelLoader(list(parsed_args.model_path) + self.search_paths)

        try:
            self.defaults = load_defaults(parsed_args.config)
            options = {k: v for k, v in vars(parsed_args).items() if k not in ("verbose", "model_path", "config")}
            config = RunConfig.from_options(parsed_args.command, options, self.defaults)
            handler = getattr(self, f"_handle_{parsed_args.command.replace('-', '_')}")
            return int(handler(config))
        except InputError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        except NumericalError as e:
            print(f"numerical error: {e}", file=sys.stderr)
            if parsed_args.verbose:
                traceback.print_exc()
            return EXIT_NUMERICAL

    def _load(self, config: RunConfig) -> LoadedModel:
        if not config.model:
            msg = f"{config.command} needs --model"
            raise InputError(msg)
        return self.loader.load(config.model, config.parameters)

    def _report(self, title: str, values: Dict[str, Any], stream: Optional[TextIO] = None) -> None:
        stream = stream or sys.stdout
        if self.json:
            print(json.dumps(_plain({"report": title, **values}), indent=2), file=stream)
            return
        print(f"{title}:", file=stream)
        width = max(len(k) for k in values)
        for key, value in values.items():
            text = f"{value:.6g}" if isinstance(value, float) else str(value)
            print(f"  {key:<{width}}  {text}", file=stream)

    def _handle_simulate(self, config: RunConfig) -> int:
        """Handle simulate command."""
        model = self._load(config)
        t_span = (config.t0, config.t_end)
        if config.flow == "hamilton":
            algebroid = model.algebroid
            system = model.system
            h = ScalarOnDual(algebroid, config.hamiltonian, "h") if config.hamiltonian else system.hamiltonian()
            start = _initial_state(algebroid, config.x0, "p")
            trajectory = hamilton_flow(algebroid, h, start, t_span, config.dt)
            drift = energy_drift(system, trajectory, h)
            initial_energy = h(DualPoint.from_array(start, algebroid.m))
        else:
            if config.hamiltonian:
                logger.warning("--h is ignored by the Lagrangian flows")
            if config.flow == "nonholonomic":
                algebroid = model.constrained_algebroid()
                system = MechanicalSystem(algebroid, model.system.potential, model.name)
                start = _initial_state(algebroid, config.x0, "v")
                trajectory = nonholonomic_flow(system, start, t_span, config.dt)
            else:
                algebroid = model.algebroid
                system = model.system
                start = _initial_state(algebroid, config.x0, "v")
                trajectory = geodesic_el_flow(system, start, t_span, config.dt)
            drift = energy_drift(system, trajectory)
            initial_energy = system.energy(start)

        if config.output:
            trajectory.write_csv(config.output)
            summary = sys.stdout
        else:
            trajectory.to_csv(sys.stdout)
            summary = sys.stderr

        windows = max(1.0, (config.t_end - config.t0) / DRIFT_WINDOW)
        allowed = (config.tol if config.tol is not None else 1e-8) * (1.0 + abs(initial_energy)) * windows
        passed = drift <= allowed
        self._report(
            f"simulate {model.name}",
            {
                "flow": config.flow,
                "steps": trajectory.times.size - 1,
                "initial_energy": initial_energy,
                "energy_drift": drift,
                "allowed_drift": allowed,
                "status": "ok" if passed else "drift exceeded",
            },
            summary,
        )
        return EXIT_OK if passed else EXIT_TOLERANCE

    def _handle_check(self, config: RunConfig) -> int:
        """Handle check command."""
        model = self._load(config)
        algebroid = model.algebroid
        section = model.section(config.section or "")
        if config.constants:
            unknown = set(config.constants) - set(section.constants)
            if unknown:
                msg = f"section '{section.name}' has no constants {sorted(unknown)}"
                raise InputError(msg)
            section = section.with_constants(**config.constants)
        for perturbation in config.perturb:
            section = _perturb(section, perturbation)

        h = model.system.hamiltonian()
        rng = np.random.default_rng(config.seed)
        points = algebroid.sample_points(rng, config.samples)
        cocycle = max(cocycle_residual(algebroid, section, q) for q in points)
        hj = max(float(np.max(np.abs(hj_residual(algebroid, h, section, q)), initial=0.0)) for q in points)
        q0 = _base_point(algebroid, config.q0) if config.q0 else algebroid.reference_point()
        harness = hamilton_jacobi_harness(algebroid, h, section, q0, (config.t0, config.t_end), config.dt)

        tolerance = config.tol if config.tol is not None else 1e-6
        passed = max(cocycle, hj, harness.max_lift_defect) <= tolerance
        self._report(
            f"check {model.name}/{section.name}",
            {
                "samples": len(points),
                "max_cocycle_residual": cocycle,
                "max_hj_residual": hj,
                "harness_lift_defect": harness.max_lift_defect,
                "harness_hj_residual": harness.max_hj_residual,
                "energy_constancy": harness.constancy_deviation,
                "tolerance": tolerance,
                "status": "pass" if passed else "fail",
            },
        )
        return EXIT_OK if passed else EXIT_TOLERANCE

    def _handle_analyze(self, config: RunConfig) -> int:
        """Handle analyze command."""
        model = self._load(config)
        algebroid = model.constrained_algebroid()
        if config.points:
            points = [_base_point(algebroid, point) for point in config.points]
        else:
            points = algebroid.sample_points(np.random.default_rng(config.seed), config.samples)
        report = verdict(algebroid, points, config.max_depth)
        if config.output:
            with config.output.open("w", newline="") as f:
                report.to_csv(f)
            logger.info(f"Wrote {len(report.rows)} rank rows to {config.output}")
        if self.json:
            summary = {
                "report": f"analyze {model.name}",
                "verdict": report.verdict,
                "stabilized_ranks": report.stabilized_ranks,
            }
            print(json.dumps(_plain(summary), indent=2))
        else:
            print(report.to_text())
        return EXIT_OK

    def _handle_morphism(self, config: RunConfig) -> int:
        """Handle morphism command."""
        model = self._load(config)
        if config.identity:
            morphism = identity_morphism(model.algebroid)
            target = model
        else:
            if model.morphism is None:
                msg = f"model '{model.name}' has no morphism block (use --identity for a self-test)"
                raise InputError(msg)
            morphism = model.morphism
            target = self.loader.load(model.document["morphism"]["target"], config.parameters)
        if config.scale_row is not None:
            morphism = scale_fiber_row(morphism, config.scale_row - 1, 2.0)

        tolerance = config.tol if config.tol is not None else 1e-6
        rng = np.random.default_rng(config.seed)
        grid = morphism.source.sample_points(rng, config.grid)
        lap = check_lap_morphism(morphism, grid)
        values: Dict[str, Any] = {"morphism": morphism.name, "points": lap.points}
        values.update(lap.as_dict())
        passed = lap.passed(tolerance)
        if not passed:
            values["status"] = "fail (not a linear almost Poisson morphism)"
            self._report(f"morphism {model.name}", values)
            return EXIT_TOLERANCE

        h = model.system.hamiltonian()
        h_bar = target.system.hamiltonian()
        dual_grid = [DualPoint(q, rng.normal(size=morphism.source.n)) for q in grid]
        values["max_hamiltonian_defect"] = check_hamiltonian_morphism(morphism, h, h_bar, dual_grid, tolerance)
        checked = [values["max_hamiltonian_defect"]]

        if target.sections:
            section = target.section(config.section) if config.section else next(iter(target.sections.values()))
            if config.constants:
                section = section.with_constants(**config.constants)
            _, transfer = transfer_hj(morphism, section, grid, h, h_bar)
            values["transferred_section"] = section.name
            values.update({k: v for k, v in transfer.as_dict().items() if k != "points"})
            checked += [
                transfer.max_source_cocycle,
                transfer.max_target_cocycle,
                transfer.max_related_defect,
                transfer.max_source_hj or 0.0,
                transfer.max_target_hj or 0.0,
            ]
        elif config.section:
            msg = f"target model '{target.name}' has no sections"
            raise InputError(msg)

        passed = max(checked) <= tolerance
        values["tolerance"] = tolerance
        values["status"] = "pass" if passed else "fail"
        self._report(f"morphism {model.name}", values)
        return EXIT_OK if passed else EXIT_TOLERANCE

    def _handle_bracket_table(self, config: RunConfig) -> int:
        """Handle bracket-table command."""
        model = self._load(config)
        algebroid = model.algebroid
        q = _base_point(algebroid, config.point) if config.point else algebroid.reference_point()
        names = momentum_names(algebroid)
        momenta = dict.fromkeys(names, 1.0)
        for key, value in config.momenta.items():
            if key not in momenta:
                msg = f"unknown momentum '{key}', expected one of {names}"
                raise InputError(msg)
            momenta[key] = value
        matrix = lambda_matrix(algebroid, DualPoint(q, np.array([momenta[k] for k in names])))
        labels = list(algebroid.coordinates) + names
        if self.json:
            print(json.dumps(_plain({"labels": labels, "matrix": matrix.tolist()}), indent=2))
            return EXIT_OK
        width = max(12, max(len(label) for label in labels) + 2)
        print("{.,.}".ljust(width) + "".join(label.rjust(width) for label in labels))
        for label, row in zip(labels, matrix):
            print(label.ljust(width) + "".join(f"{value:{width}.6g}" for value in row))
        return EXIT_OK

    def _handle_models(self, config: RunConfig) -> int:
        """Handle models command."""
        rows = []
        failed = False
        for name in self.loader.list_models():
            try:
                model = self.loader.load(name)
            except InputError as e:
                print(f"error: {e}", file=sys.stderr)
                failed = True
                continue
            algebroid = model.algebroid
            flags = [
                flag
                for flag, present in (
                    ("lie", algebroid.lie_algebroid),
                    ("constrained", algebroid.constrained),
                    ("ambient", algebroid.constrained_rank is not None),
                    ("morphism", model.morphism is not None),
                )
                if present
            ]
            rows.append(
                {"name": model.name, "m": algebroid.m, "n": algebroid.n, "flags": flags, "source": model.source}
            )
        if self.json:
            print(json.dumps(_plain(rows), indent=2))
        elif not rows:
            print("No models found")
        else:
            print("Available models:")
            for row in rows:
                print(f"  {row['name']:<22} m={row['m']} n={row['n']} [{','.join(row['flags'])}] {row['source']}")
        return EXIT_INPUT if failed else EXIT_OK


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays inside a report to JSON types."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def _base_point(algebroid: SkewAlgebroid, values: Dict[str, float]) -> np.ndarray:
    unknown = set(values) - set(algebroid.coordinates)
    missing = [c for c in algebroid.coordinates if c not in values]
    if unknown or missing:
        msg = f"point for {algebroid.name} needs exactly {list(algebroid.coordinates)} (missing {missing})"
        raise InputError(msg)
    return np.array([values[c] for c in algebroid.coordinates])


def _initial_state(algebroid: SkewAlgebroid, values: Dict[str, float], prefix: str) -> np.ndarray:
    """Base coordinates by name and fiber components as ``<prefix>1..<prefix>n``; unset fiber entries are 0."""
    fiber_names = [f"{prefix}{k + 1}" for k in range(algebroid.n)]
    unknown = set(values) - set(algebroid.coordinates) - set(fiber_names)
    if unknown:
        expected = f"{prefix}1..{prefix}{algebroid.n}"
        msg = f"--x0 names {sorted(unknown)} are neither coordinates of {algebroid.name} nor {expected}"
        raise InputError(msg)
    q = _base_point(algebroid, {k: v for k, v in values.items() if k in algebroid.coordinates})
    fiber = np.array([values.get(name, 0.0) for name in fiber_names])
    return np.concatenate([q, fiber])


def _perturb(section: Section1Form, text: str) -> Section1Form:
    match = PERTURBATION.match(text)
    if match is None:
        msg = f"malformed perturbation '{text}', expected 'alphaK*=c' or 'alphaK+=expr'"
        raise InputError(msg)
    index = int(match.group(1)) - 1
    if not 0 <= index < len(section.components):
        msg = f"perturbation '{text}' targets a component outside 1..{len(section.components)}"
        raise InputError(msg)
    if match.group(2) == "*":
        try:
            factor = float(match.group(3))
        except ValueError as e:
            msg = f"perturbation factor must be a number, got '{match.group(3)}'"
            raise InputError(msg) from e
        return section.scaled(index, factor)
    return section.shifted(index, parse(match.group(3)))


def main() -> None:
    """Main entry point for the CLI."""
    cli = SkewMechCLI()
    sys.exit(cli.run())


if __name__ == "__main__":
    main()
