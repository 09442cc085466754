"""Model files: parsing, validation, bundled models and serialization.

A model file is a JSON (or YAML) document whose coefficients are expression strings. Three kinds
are understood:

- ``expression``: anchor rows and structure functions given directly
- ``tangent``: the tangent bundle of the listed coordinates
- ``framed``: an adapted frame written as rows over the basis of a ``parent`` model
  (``parent: tangent`` means the tangent bundle of the document's own coordinates)
"""

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

import numpy as np
import yaml

from ..algebroid import (
    ChartDomain,
    ExpressionAlgebroid,
    FramedAlgebroid,
    Section1Form,
    SkewAlgebroid,
    restrict_constrained,
    standard_tangent,
)
from ..dynamics import MechanicalSystem
from ..errors import (
    EvaluationError,
    ExpressionSyntaxError,
    InputError,
    ModelError,
    NumericalError,
    RankDeficiencyError,
)
from ..expr import Expression, Negate, Number, free_variables, parse, pretty, substitute
from ..morphism import BundleMorphism
from ..poisson import DualPoint, coordinate_jacobiator

logger = logging.getLogger(__name__)

MODEL_PATH_ENV = "ALGEBROID_MODEL_PATH"
BUNDLED_DIR = Path(__file__).parent / "data"
SUFFIXES = (".json", ".yaml", ".yml")
KINDS = ("expression", "tangent", "framed")

JACOBIATOR_GATE = 1e-3
JACOBIATOR_POINTS = 5
ORTHONORMALITY_TOLERANCE = 1e-8
CHECK_POINTS = 20
ANTISYMMETRY_TOLERANCE = 1e-9

Document = Dict[str, Any]


@dataclass
class LoadedModel:
    """Everything a model file defines, validated and bound to parameter values."""

    name: str
    algebroid: SkewAlgebroid
    system: MechanicalSystem
    sections: Dict[str, Section1Form] = field(default_factory=dict)
    test_functions: Dict[str, Expression] = field(default_factory=dict)
    morphism: Optional[BundleMorphism] = None
    description: str = ""
    source: str = ""
    path: Optional[Path] = None
    document: Document = field(default_factory=dict)

    @property
    def parameters(self) -> Dict[str, float]:
        return dict(self.algebroid.parameters)

    def section(self, name: str) -> Section1Form:
        if name not in self.sections:
            msg = f"model '{self.name}' has no section '{name}' (available: {sorted(self.sections)})"
            raise InputError(msg)
        return self.sections[name]

    def test_function(self, name: str) -> Expression:
        if name not in self.test_functions:
            msg = f"model '{self.name}' has no test function '{name}' (available: {sorted(self.test_functions)})"
            raise InputError(msg)
        return self.test_functions[name]

    def constrained_algebroid(self) -> SkewAlgebroid:
        """The algebroid on D: the model itself, or its restriction when it is an ambient frame."""
        algebroid = self.algebroid
        if algebroid.constrained or algebroid.constrained_rank is None:
            return algebroid
        return restrict_constrained(algebroid)


def _map_expressions(document: Document, fn: Callable[[str, Any], Any]) -> Document:
    """Copy of ``document`` with ``fn(location, value)`` applied to every expression slot."""
    out = copy.deepcopy(document)

    def cells(key: str) -> None:
        if isinstance(out.get(key), list):
            out[key] = [
                [fn(f"{key}[{a}][{b}]", v) for b, v in enumerate(row)] if isinstance(row, list) else row
                for a, row in enumerate(out[key])
            ]

    if isinstance(out.get("definitions"), dict):
        out["definitions"] = {k: fn(f"definitions.{k}", v) for k, v in out["definitions"].items()}
    for key in ("anchor", "frame_rows", "metric"):
        cells(key)
    if isinstance(out.get("structure"), list):
        for index, entry in enumerate(out["structure"]):
            if isinstance(entry, dict) and "expr" in entry:
                entry["expr"] = fn(f"structure[{index}].expr", entry["expr"])
    if "potential" in out:
        out["potential"] = fn("potential", out["potential"])
    chart = out.get("chart_domain")
    if isinstance(chart, dict) and isinstance(chart.get("excluded"), list):
        chart["excluded"] = [fn(f"chart_domain.excluded[{i}]", v) for i, v in enumerate(chart["excluded"])]
    if isinstance(out.get("sections"), dict):
        for name, section in out["sections"].items():
            if isinstance(section, dict) and isinstance(section.get("components"), list):
                section["components"] = [
                    fn(f"sections.{name}.components[{i}]", v) for i, v in enumerate(section["components"])
                ]
    if isinstance(out.get("test_functions"), dict):
        out["test_functions"] = {k: fn(f"test_functions.{k}", v) for k, v in out["test_functions"].items()}
    morphism = out.get("morphism")
    if isinstance(morphism, dict):
        if isinstance(morphism.get("base_map"), list):
            morphism["base_map"] = [fn(f"morphism.base_map[{i}]", v) for i, v in enumerate(morphism["base_map"])]
        if isinstance(morphism.get("fiber_map"), list):
            morphism["fiber_map"] = [
                [fn(f"morphism.fiber_map[{a}][{b}]", v) for b, v in enumerate(row)] if isinstance(row, list) else row
                for a, row in enumerate(morphism["fiber_map"])
            ]
    return out


def _render(location: str, value: Any) -> Any:
    if isinstance(value, str):
        return pretty(parse(value))
    return value


def check_points(algebroid: SkewAlgebroid) -> List[np.ndarray]:
    """Reference point plus a fixed sample of the chart, shared by the load-time checks."""
    rng = np.random.default_rng(0)
    return [algebroid.reference_point(), *algebroid.sample_points(rng, CHECK_POINTS)]

class _Builder:
    """Parses one document into validated objects."""

    def __init__(self, document: Document, origin: str, parameters: Dict[str, float]):
        self.document = document
        self.origin = origin
        self.parameters = parameters
        self.definitions: Dict[str, Expression] = {}
        self.given: Dict[Tuple[int, int, int], Tuple[Expression, str]] = {}

    def error(self, message: str, location: str = "") -> ModelError:
        where = f"{self.origin}:{location}" if location else self.origin
        return ModelError(message, where)

    def require(self, key: str) -> Any:
        if key not in self.document:
            raise self.error(f"missing required field '{key}'")
        return self.document[key]

    def names(self, key: str) -> List[str]:
        value = self.require(key)
        if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
            raise self.error("expected a list of names", key)
        if len(set(value)) != len(value):
            raise self.error("names must be unique", key)
        return list(value)

    def expression(self, value: Any, location: str, allowed: Set[str]) -> Expression:
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise self.error(f"expected an expression, got {type(value).__name__}", location)
        if isinstance(value, (int, float)):
            return Number(float(value))
        try:
            tree = parse(value)
        except ExpressionSyntaxError as e:
            raise self.error(str(e), location) from e
        tree = substitute(tree, self.definitions)
        unknown = free_variables(tree) - allowed
        if unknown:
            raise self.error(f"unknown names {sorted(unknown)}", location)
        return tree

    def matrix(
        self, key: str, rows: int, cols: int, allowed: Set[str], source: Optional[Any] = None
    ) -> List[List[Expression]]:
        value = self.document.get(key) if source is None else source
        shape_ok = isinstance(value, list) and len(value) == rows
        if not shape_ok or any(not isinstance(r, list) or len(r) != cols for r in value):
            raise self.error(f"expected {rows} rows of {cols} entries", key)
        return [
            [self.expression(v, f"{key}[{a}][{b}]", allowed) for b, v in enumerate(row)] for a, row in enumerate(value)
        ]

    def bind_definitions(self, reserved: Set[str]) -> None:
        raw = self.document.get("definitions", {})
        if not isinstance(raw, dict):
            raise self.error("expected a mapping of names to expressions", "definitions")
        allowed = set(reserved)
        for name, text in raw.items():
            if name in reserved:
                raise self.error(f"definition '{name}' shadows a coordinate or parameter", f"definitions.{name}")
            self.definitions[name] = self.expression(text, f"definitions.{name}", allowed)

    def chart_domain(self, allowed: Set[str], coordinates: Sequence[str]) -> Optional[ChartDomain]:
        raw = self.document.get("chart_domain")
        if raw is None:
            return None
        if not isinstance(raw, dict):
            raise self.error("expected a mapping", "chart_domain")
        bounds: Dict[str, Tuple[float, float]] = {}
        for name, pair in raw.get("bounds", {}).items():
            if name not in coordinates:
                raise self.error(f"bound for unknown coordinate '{name}'", "chart_domain.bounds")
            if not isinstance(pair, list) or len(pair) != 2 or not float(pair[0]) < float(pair[1]):
                raise self.error(f"bound for '{name}' must be [low, high] with low < high", "chart_domain.bounds")
            bounds[name] = (float(pair[0]), float(pair[1]))
        excluded = tuple(
            self.expression(v, f"chart_domain.excluded[{i}]", allowed) for i, v in enumerate(raw.get("excluded", []))
        )
        reference = {str(k): float(v) for k, v in raw.get("reference_point", {}).items()}
        return ChartDomain(bounds, excluded, reference)

    def structure(self, frame: Sequence[str], allowed: Set[str]) -> Dict[Tuple[int, int, int], Expression]:
        raw = self.document.get("structure", [])
        if not isinstance(raw, list):
            raise self.error("expected a list of {pair, target, expr} entries", "structure")
        given: Dict[Tuple[int, int, int], Tuple[Expression, str]] = {}
        for index, entry in enumerate(raw):
            location = f"structure[{index}]"
            if not isinstance(entry, dict) or not {"pair", "target", "expr"} <= set(entry):
                raise self.error("entry needs 'pair', 'target' and 'expr'", location)
            pair = entry["pair"]
            if not isinstance(pair, list) or len(pair) != 2:
                raise self.error("'pair' must list two frame labels", location)
            alpha, beta = (self.frame_index(frame, label, location) for label in pair)
            gamma = self.frame_index(frame, entry["target"], location)
            if alpha == beta:
                raise self.error("bracket of a frame section with itself must vanish", location)
            given[(alpha, beta, gamma)] = (self.expression(entry["expr"], f"{location}.expr", allowed), location)
        structure: Dict[Tuple[int, int, int], Expression] = {}
        for (alpha, beta, gamma), (tree, location) in given.items():
            if alpha < beta:
                structure[(alpha, beta, gamma)] = tree
            elif (beta, alpha, gamma) not in given:
                structure[(beta, alpha, gamma)] = Negate(tree)
        self.given = given
        return structure

    def check_antisymmetry(self, algebroid: SkewAlgebroid) -> None:
        """Entries given for both orders of a pair must be negatives of each other at every check point."""
        pairs = [
            (key, tree, location, self.given[(key[1], key[0], key[2])][0])
            for key, (tree, location) in self.given.items()
            if key[0] < key[1] and (key[1], key[0], key[2]) in self.given
        ]
        if not pairs:
            return
        for q in check_points(algebroid):
            binding = algebroid.binding(q)
            for (alpha, beta, gamma), tree, location, mirror in pairs:
                try:
                    value = tree.evaluate(binding)
                    total = value + mirror.evaluate(binding)
                except EvaluationError as e:
                    raise self.error(f"cannot compare antisymmetric entries: {e}", location) from e
                if abs(total) <= ANTISYMMETRY_TOLERANCE * (1.0 + abs(value)):
                    continue
                raise self.error(
                    f"C^{gamma + 1}_{{{alpha + 1}{beta + 1}}} and C^{gamma + 1}_{{{beta + 1}{alpha + 1}}} "
                    "are not negatives of each other",
                    location,
                )

    def frame_index(self, frame: Sequence[str], label: Any, location: str) -> int:
        if isinstance(label, str) and label in frame:
            return frame.index(label)
        if isinstance(label, int) and not isinstance(label, bool) and 1 <= label <= len(frame):
            return label - 1
        raise self.error(f"unknown frame label {label!r}", location)


class ModelLoader:
    """Finds, loads, validates and saves model files.

    Search order: explicit ``search_paths``, then the directories in ``ALGEBROID_MODEL_PATH``,
    then the bundled models.
    """

    def __init__(self, search_paths: Optional[Sequence[Union[str, Path]]] = None):
        """Initialize the loader.

        Args:
            search_paths: Extra directories searched before the environment and bundled ones
        """
        paths = [Path(p) for p in (search_paths or [])]
        env_value = os.environ.get(MODEL_PATH_ENV, "")
        paths.extend(Path(p) for p in env_value.split(os.pathsep) if p)
        paths.append(BUNDLED_DIR)
        self.search_paths: List[Path] = paths
        logger.debug(f"Model search path: {[str(p) for p in self.search_paths]}")

    def list_models(self) -> List[str]:
        """Names of all models on the search path, first occurrence wins."""
        names: Dict[str, Path] = {}
        for directory in self.search_paths:
            if not directory.is_dir():
                continue
            for path in sorted(directory.iterdir()):
                if path.suffix in SUFFIXES and path.stem not in names:
                    names[path.stem] = path
        return sorted(names)

    def resolve(self, name_or_path: Union[str, Path]) -> Path:
        """Map a bare model name or a file path to an existing file.

        Raises:
            ModelError: If nothing matches
        """
        candidate = Path(name_or_path)
        if candidate.suffix in SUFFIXES and candidate.is_file():
            return candidate
        for directory in self.search_paths:
            for suffix in SUFFIXES:
                path = directory / f"{name_or_path}{suffix}"
                if path.is_file():
                    return path
        msg = f"model '{name_or_path}' not found on search path {[str(p) for p in self.search_paths]}"
        raise ModelError(msg)

    def read(self, path: Path) -> Document:
        """Read a JSON or YAML document."""
        try:
            with path.open(encoding="utf-8") as f:
                document = yaml.safe_load(f) if path.suffix in (".yaml", ".yml") else json.load(f)
        except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
            msg = f"cannot read model file: {e}"
            raise ModelError(msg, str(path)) from e
        if not isinstance(document, dict):
            msg = "model file must contain a mapping at the top level"
            raise ModelError(msg, str(path))
        return document

    def load(
        self,
        name_or_path: Union[str, Path],
        overrides: Optional[Mapping[str, float]] = None,
    ) -> LoadedModel:
        """Load and validate a model.

        Args:
            name_or_path: Bundled/search-path model name or a file path
            overrides: Parameter values replacing the file defaults

        Returns:
            The validated model

        Raises:
            ModelError: On format violations, unknown override names or failed invariants
        """
        overrides = dict(overrides or {})
        model = self._load(name_or_path, overrides, ())
        unknown = set(overrides) - set(model.algebroid.parameters)
        if unknown:
            msg = f"unknown parameters {sorted(unknown)} for model '{model.name}'"
            raise ModelError(msg)
        return model

    def load_document(self, document: Document, overrides: Optional[Mapping[str, float]] = None) -> LoadedModel:
        """Load a model from an in-memory document."""
        return self._build(document, dict(overrides or {}), None, ())

    def _load(
        self, name_or_path: Union[str, Path], overrides: Mapping[str, float], stack: Tuple[str, ...]
    ) -> LoadedModel:
        path = self.resolve(name_or_path)
        key = str(path.resolve())
        if key in stack:
            msg = f"model reference cycle through {path}"
            raise ModelError(msg)
        document = self.read(path)
        logger.debug(f"Loading model from {path}")
        return self._build(document, overrides, path, stack + (key,))

    def _build(
        self, document: Document, overrides: Mapping[str, float], path: Optional[Path], stack: Tuple[str, ...]
    ) -> LoadedModel:
        origin = str(path) if path is not None else "<document>"
        name = str(document.get("name") or (path.stem if path is not None else "model"))
        kind = document.get("kind", "expression")
        if kind not in KINDS:
            msg = f"unknown model kind '{kind}' (expected one of {KINDS})"
            raise ModelError(msg, origin)

        raw_parameters = document.get("parameters", {})
        if not isinstance(raw_parameters, dict):
            msg = "parameters must map names to numbers"
            raise ModelError(msg, f"{origin}:parameters")
        try:
            parameters = {str(k): float(v) for k, v in raw_parameters.items()}
        except (TypeError, ValueError) as e:
            msg = f"parameter values must be numbers: {e}"
            raise ModelError(msg, f"{origin}:parameters") from e

        parent: Optional[SkewAlgebroid] = None
        if kind == "framed":
            parent = self._parent(document, overrides, origin, stack)
            for k, v in parent.parameters.items():
                parameters.setdefault(k, v)
        parameters.update({k: float(v) for k, v in overrides.items() if k in parameters})

        builder = _Builder(document, origin, parameters)
        coordinates = list(parent.coordinates) if parent is not None else builder.names("coordinates")
        if parent is not None and "coordinates" in document and list(document["coordinates"]) != coordinates:
            msg = f"coordinates {document['coordinates']} differ from the parent's {coordinates}"
            raise ModelError(msg, f"{origin}:coordinates")
        clash = set(coordinates) & set(parameters)
        if clash:
            msg = f"names used both as coordinates and parameters: {sorted(clash)}"
            raise ModelError(msg, origin)
        base_names = set(coordinates) | set(parameters)
        builder.bind_definitions(base_names)
        chart_domain = builder.chart_domain(base_names, coordinates)
        flags = document.get("flags", {})
        lie_algebroid = bool(flags.get("lie_algebroid", kind == "tangent"))
        constrained = bool(flags.get("constrained", False))
        constrained_rank = document.get("constrained_rank")

        algebroid = self._algebroid(
            builder,
            kind,
            name,
            coordinates,
            parameters,
            parent,
            base_names,
            chart_domain,
            lie_algebroid,
            constrained,
            constrained_rank,
        )
        builder.check_antisymmetry(algebroid)
        self._check_orthonormal(builder, algebroid, base_names)
        if algebroid.lie_algebroid:
            self._check_jacobiator(algebroid, origin)

        potential = None
        if "potential" in document:
            potential = builder.expression(document["potential"], "potential", base_names)
        system = MechanicalSystem(algebroid, potential, name)
        sections = self._sections(builder, algebroid, base_names)
        test_functions = {
            str(k): builder.expression(v, f"test_functions.{k}", base_names)
            for k, v in document.get("test_functions", {}).items()
        }
        morphism = self._morphism(builder, algebroid, base_names, overrides, stack)
        logger.info(f"Loaded model {name}: m={algebroid.m}, n={algebroid.n}")
        return LoadedModel(
            name=name,
            algebroid=algebroid,
            system=system,
            sections=sections,
            test_functions=test_functions,
            morphism=morphism,
            description=str(document.get("description", "")),
            source=str(document.get("source", "")),
            path=path,
            document=copy.deepcopy(document),
        )

    def _parent(
        self, document: Document, overrides: Mapping[str, float], origin: str, stack: Tuple[str, ...]
    ) -> SkewAlgebroid:
        parent_name = document.get("parent")
        if not parent_name:
            msg = "framed models need a 'parent'"
            raise ModelError(msg, origin)
        if parent_name == "tangent":
            coordinates = document.get("coordinates")
            if not isinstance(coordinates, list) or not coordinates:
                msg = "a framed model over the tangent bundle must list its coordinates"
                raise ModelError(msg, f"{origin}:coordinates")
            parameters = {str(k): float(v) for k, v in document.get("parameters", {}).items()}
            return standard_tangent(coordinates, parameters, f"T({','.join(coordinates)})")
        return self._load(parent_name, overrides, stack).algebroid

    def _algebroid(
        self,
        builder: _Builder,
        kind: str,
        name: str,
        coordinates: List[str],
        parameters: Dict[str, float],
        parent: Optional[SkewAlgebroid],
        allowed: Set[str],
        chart_domain: Optional[ChartDomain],
        lie_algebroid: bool,
        constrained: bool,
        constrained_rank: Optional[int],
    ) -> SkewAlgebroid:
        options = {
            "chart_domain": chart_domain,
            "lie_algebroid": lie_algebroid,
            "constrained": constrained,
            "constrained_rank": constrained_rank,
        }
        try:
            if kind == "tangent":
                algebroid: SkewAlgebroid = standard_tangent(coordinates, parameters, name, chart_domain)
                algebroid.constrained = constrained
                return algebroid
            frame = builder.names("frame")
            if kind == "framed" and parent is not None:
                if chart_domain is None:
                    options["chart_domain"] = parent.chart_domain
                rows = builder.matrix("frame_rows", parent.n, parent.n, allowed)
                metric = builder.matrix("metric", parent.n, parent.n, allowed) if "metric" in builder.document else None
                return FramedAlgebroid(name, parent, frame, rows, metric, parameters, **options)
            anchor = builder.matrix("anchor", len(frame), len(coordinates), allowed)
            structure = builder.structure(frame, allowed)
            return ExpressionAlgebroid(name, coordinates, frame, anchor, structure, parameters, **options)
        except ModelError:
            raise
        except (InputError, NumericalError) as e:
            raise builder.error(str(e)) from e

    def _check_orthonormal(self, builder: _Builder, algebroid: SkewAlgebroid, allowed: Set[str]) -> None:
        """Orthonormality of the frame, or of the D block and its orthogonality to the rest."""
        if isinstance(algebroid, FramedAlgebroid):
            if algebroid.metric is None:
                return

            def gram(q: np.ndarray) -> np.ndarray:
                return algebroid.gram_at(q)

        elif "metric" in builder.document:
            metric = builder.matrix("metric", algebroid.m, algebroid.m, allowed)

            def gram(q: np.ndarray) -> np.ndarray:
                binding = algebroid.binding(q)
                g = np.array([[e.evaluate(binding) for e in row] for row in metric])
                anchor = algebroid.anchor_at(q)
                return anchor @ g @ anchor.T

        else:
            return
        rank = algebroid.constrained_rank or algebroid.n
        for q in check_points(algebroid):
            try:
                g = gram(q)
            except EvaluationError as e:
                raise builder.error(f"cannot evaluate the metric: {e}", "metric") from e
            deviation = max(
                float(np.max(np.abs(g[:rank, :rank] - np.eye(rank)))),
                float(np.max(np.abs(g[:rank, rank:]), initial=0.0)),
            )
            if deviation > ORTHONORMALITY_TOLERANCE:
                raise builder.error(
                    f"frame is not orthonormal for the metric at {q.tolist()} (deviation {deviation:.3g})", "metric"
                )

    def _check_jacobiator(self, algebroid: SkewAlgebroid, origin: str) -> None:
        """Spot-check the Jacobi identity on coordinate functions of D*."""
        rng = np.random.default_rng(0)
        worst = 0.0
        for q in algebroid.sample_points(rng, JACOBIATOR_POINTS):
            x = DualPoint(q, rng.uniform(-1.0, 1.0, algebroid.n))
            worst = max(worst, float(np.max(np.abs(coordinate_jacobiator(algebroid, x)))))
        if worst > JACOBIATOR_GATE:
            msg = f"flagged as a Lie algebroid but the Jacobiator reaches {worst:.3g}"
            raise ModelError(msg, origin)
        logger.debug(f"{algebroid.name}: Jacobiator gate passed (max {worst:.3g})")

    def _sections(self, builder: _Builder, algebroid: SkewAlgebroid, allowed: Set[str]) -> Dict[str, Section1Form]:
        raw = builder.document.get("sections", {})
        if not isinstance(raw, dict):
            raise builder.error("expected a mapping of section names", "sections")
        sections: Dict[str, Section1Form] = {}
        for name, entry in raw.items():
            location = f"sections.{name}"
            if not isinstance(entry, dict) or not isinstance(entry.get("components"), list):
                raise builder.error("section needs a 'components' list", location)
            constants = {str(k): float(v) for k, v in entry.get("constants", {}).items()}
            names = allowed | set(constants)
            components = [
                builder.expression(v, f"{location}.components[{i}]", names) for i, v in enumerate(entry["components"])
            ]
            try:
                sections[name] = Section1Form(algebroid, components, constants, name)
            except InputError as e:
                raise builder.error(str(e), location) from e
        return sections

    def _morphism(
        self,
        builder: _Builder,
        algebroid: SkewAlgebroid,
        allowed: Set[str],
        overrides: Mapping[str, float],
        stack: Tuple[str, ...],
    ) -> Optional[BundleMorphism]:
        raw = builder.document.get("morphism")
        if raw is None:
            return None
        if not isinstance(raw, dict) or not {"target", "base_map", "fiber_map"} <= set(raw):
            raise builder.error("morphism needs 'target', 'base_map' and 'fiber_map'", "morphism")
        target = self._load(raw["target"], overrides, stack).algebroid
        base_map = [
            builder.expression(v, f"morphism.base_map[{i}]", allowed) for i, v in enumerate(raw["base_map"])
        ]
        fiber_map = builder.matrix("morphism.fiber_map", target.n, algebroid.n, allowed, raw["fiber_map"])
        try:
            injective = bool(raw.get("injective", False))
            label = f"{algebroid.name}->{target.name}"
            morphism = BundleMorphism(algebroid, target, base_map, fiber_map, injective, label)
            if morphism.injective:
                morphism.check_injective(algebroid.sample_points(np.random.default_rng(0), 5))
        except (InputError, RankDeficiencyError) as e:
            raise builder.error(str(e), "morphism") from e
        return morphism

    def dump(self, model: LoadedModel) -> Document:
        """JSON-ready document of a loaded model with its bound parameter values."""
        document = _map_expressions(model.document, _render)
        own = model.document.get("parameters", {})
        document["parameters"] = {k: model.algebroid.parameters[k] for k in own}
        document["name"] = model.name
        return document

    def save(self, model: LoadedModel, path: Union[str, Path]) -> Path:
        """Write ``dump(model)`` as JSON, or YAML for a .yaml/.yml path."""
        path = Path(path)
        document = self.dump(model)
        with path.open("w", encoding="utf-8") as f:
            if path.suffix in (".yaml", ".yml"):
                yaml.safe_dump(document, f, sort_keys=False)
            else:
                json.dump(document, f, indent=2)
                f.write("\n")
        logger.info(f"Saved model {model.name} to {path}")
        return path

