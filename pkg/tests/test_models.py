"""Tests for model files, the bundled models and their validation."""

import copy
import json
import re

import numpy as np
import pytest
import yaml

from skewmech.errors import InputError, ModelError
from skewmech.expr import parse
from skewmech.models import MODEL_PATH_ENV, ModelLoader

BUNDLED = {
    "beanie_full",
    "beanie_reduced",
    "carriage",
    "carriage_ambient",
    "r2_counterexample",
    "snakeboard_ambient",
    "snakeboard_atiyah",
    "snakeboard_reduced",
    "standard_tq_r2",
}


def toy_document(**changes):
    """Small expression model on the plane."""
    document = {
        "name": "toy",
        "kind": "expression",
        "coordinates": ["x", "y"],
        "frame": ["X1", "X2", "X3"],
        "parameters": {"a": 1.0},
        "anchor": [["1", "0"], ["0", "a*x"], ["0", "0"]],
        "structure": [{"pair": ["X1", "X2"], "target": "X3", "expr": "y"}],
    }
    document.update(changes)
    return document


def expression_slots(document):
    """Expression strings of a document keyed by where they sit."""
    slots = {f"definitions.{k}": v for k, v in document.get("definitions", {}).items()}
    for a, row in enumerate(document.get("anchor", [])):
        slots.update({f"anchor[{a}][{b}]": v for b, v in enumerate(row)})
    for index, entry in enumerate(document.get("structure", [])):
        slots[f"structure[{index}]"] = entry["expr"]
    if "potential" in document:
        slots["potential"] = document["potential"]
    for index, source in enumerate(document.get("chart_domain", {}).get("excluded", [])):
        slots[f"excluded[{index}]"] = source
    for name, section in document.get("sections", {}).items():
        slots.update({f"{name}[{i}]": v for i, v in enumerate(section["components"])})
    slots.update({f"test_functions.{k}": v for k, v in document.get("test_functions", {}).items()})
    return slots


def write_json(path, document):
    path.write_text(json.dumps(document))
    return path


class TestSearchPath:
    """Test finding model files."""

    def test_bundled_models_are_listed(self, loader):
        """Every bundled model is on the default path."""
        assert BUNDLED <= set(loader.list_models())

    def test_resolve(self, loader, tmp_path):
        """Names resolve on the search path, file paths resolve directly."""
        assert loader.resolve("carriage").name == "carriage.json"
        path = write_json(tmp_path / "toy.json", toy_document())
        assert loader.resolve(path) == path
        with pytest.raises(ModelError, match="not found"):
            loader.resolve("no_such_model")

    def test_search_paths_come_first(self, tmp_path):
        """A model in an explicit directory shadows the bundled one."""
        write_json(tmp_path / "carriage.json", toy_document(name="carriage"))
        model = ModelLoader(search_paths=[tmp_path]).load("carriage")
        assert model.algebroid.m == 2
        assert model.path == tmp_path / "carriage.json"

    def test_environment_path(self, tmp_path, monkeypatch):
        """Directories in the environment variable are searched."""
        write_json(tmp_path / "toy.json", toy_document())
        monkeypatch.setenv(MODEL_PATH_ENV, str(tmp_path))
        loader = ModelLoader()
        assert "toy" in loader.list_models()
        assert loader.load("toy").name == "toy"

    def test_unreadable_files(self, loader, tmp_path):
        """Broken JSON and non-mapping YAML are model errors."""
        broken = tmp_path / "broken.json"
        broken.write_text("{")
        with pytest.raises(ModelError, match="cannot read"):
            loader.load(broken)
        listing = tmp_path / "listing.yaml"
        listing.write_text("- 1\n- 2\n")
        with pytest.raises(ModelError, match="mapping"):
            loader.load(listing)


class TestBundledModels:
    """Test loading the bundled models."""

    @pytest.mark.parametrize("name", sorted(BUNDLED))
    def test_loads(self, loader, name):
        """Each bundled model loads and evaluates at its reference point."""
        model = loader.load(name)
        algebroid = model.algebroid
        q = algebroid.reference_point()
        assert algebroid.anchor_at(q).shape == (algebroid.n, algebroid.m)
        assert algebroid.structure_at(q).shape == (algebroid.n,) * 3
        assert model.description

    @pytest.mark.parametrize("name", sorted(BUNDLED))
    def test_source_cites_section(self, loader, name):
        """Source metadata opens with a section number and a quoted phrase."""
        source = loader.load(name).source
        assert re.match(r'§\d+(\.\d+)* "[^"]+": \S', source), source

    def test_overrides(self, loader):
        """Overrides replace defaults and must name known parameters."""
        model = loader.load("snakeboard_reduced", {"J1": 0.25})
        assert model.parameters["J1"] == 0.25
        assert model.algebroid.anchor_at([0.0, 0.0])[0, 0] == pytest.approx(1.0 / np.sqrt(0.5))
        with pytest.raises(ModelError, match="unknown parameters"):
            loader.load("snakeboard_reduced", {"J2": 1.0})

    def test_named_members(self, loader):
        """Sections and test functions are looked up by name."""
        model = loader.load("carriage")
        assert model.section("constant").constants == {"K1": 1.0, "K2": 0.5}
        with pytest.raises(InputError, match="no section"):
            model.section("missing")
        with pytest.raises(InputError, match="no test function"):
            model.test_function("missing")

    def test_constrained_algebroid(self, loader):
        """Ambient frames restrict to their first constrained_rank elements."""
        ambient = loader.load("snakeboard_ambient")
        assert not ambient.algebroid.constrained
        restricted = ambient.constrained_algebroid()
        assert restricted.constrained
        assert restricted.n == 3
        reduced = loader.load("snakeboard_reduced")
        assert reduced.constrained_algebroid() is reduced.algebroid


class TestStructureEntries:
    """Test how structure functions are read."""

    def test_antisymmetric_completion(self, loader):
        """Listing one order of a pair fills in the other."""
        algebroid = loader.load_document(toy_document()).algebroid
        structure = algebroid.structure_at([0.5, 2.0])
        assert structure[0, 1, 2] == pytest.approx(2.0)
        assert structure[1, 0, 2] == pytest.approx(-2.0)
        assert np.count_nonzero(structure) == 2

    def test_integer_labels(self, loader):
        """Frame labels may be 1-based indices."""
        by_index = toy_document(structure=[{"pair": [1, 2], "target": 3, "expr": "y"}])
        named = loader.load_document(toy_document()).algebroid.structure_at([0.5, 2.0])
        np.testing.assert_array_equal(loader.load_document(by_index).algebroid.structure_at([0.5, 2.0]), named)

    def test_consistent_orders(self, loader):
        """Both orders may be given when they are negatives of each other."""
        entries = [
            {"pair": ["X1", "X2"], "target": "X3", "expr": "y"},
            {"pair": ["X2", "X1"], "target": "X3", "expr": "-y"},
        ]
        structure = loader.load_document(toy_document(structure=entries)).algebroid.structure_at([0.0, 1.0])
        assert structure[1, 0, 2] == pytest.approx(-1.0)

    def test_orders_compared_across_the_chart(self, loader):
        """Orders that cancel only on the line x = 0.3 are refused."""
        entries = [
            {"pair": ["X1", "X2"], "target": "X3", "expr": "x - 0.3"},
            {"pair": ["X2", "X1"], "target": "X3", "expr": "x - 0.3"},
        ]
        with pytest.raises(ModelError, match="not negatives"):
            loader.load_document(toy_document(structure=entries))


class TestValidation:
    """Test model errors for format violations and failed invariants."""

    @pytest.mark.parametrize(
        "changes,match",
        [
            ({"kind": "lattice"}, "unknown model kind"),
            ({"parameters": {"a": 1.0, "x": 2.0}}, "both as coordinates and parameters"),
            ({"definitions": {"a": "2"}}, "shadows"),
            ({"anchor": [["1", "0"], ["0", "z"], ["0", "0"]]}, r"anchor\[1\]\[1\].*unknown names"),
            ({"anchor": [["1", "0"]]}, "expected 3 rows"),
            ({"anchor": [["1", "0"], ["0", "x +"], ["0", "0"]]}, r"anchor\[1\]\[1\]"),
            ({"structure": [{"pair": ["X1", "X1"], "target": "X2", "expr": "1"}]}, "with itself"),
            ({"structure": [{"pair": ["X1", "X9"], "target": "X2", "expr": "1"}]}, "unknown frame label"),
            ({"structure": [{"pair": ["X1", "X2"], "expr": "1"}]}, "'pair', 'target' and 'expr'"),
            (
                {
                    "structure": [
                        {"pair": ["X1", "X2"], "target": "X3", "expr": "1"},
                        {"pair": ["X2", "X1"], "target": "X3", "expr": "1"},
                    ]
                },
                "not negatives",
            ),
            ({"chart_domain": {"bounds": {"x": [1.0, 0.0]}}}, "low < high"),
            ({"chart_domain": {"bounds": {"w": [0.0, 1.0]}}}, "unknown coordinate"),
            ({"coordinates": ["x", "x"]}, "unique"),
        ],
    )
    def test_format_errors(self, loader, changes, match):
        """Malformed documents are rejected with their location."""
        with pytest.raises(ModelError, match=match):
            loader.load_document(toy_document(**changes))

    def test_missing_field(self, loader):
        """Required fields are named."""
        document = toy_document()
        del document["frame"]
        with pytest.raises(ModelError, match="'frame'"):
            loader.load_document(document)

    def test_jacobiator_gate(self, loader):
        """A non-Lie bracket flagged as Lie is refused."""
        document = loader.read(loader.resolve("snakeboard_reduced"))
        document["flags"] = {"lie_algebroid": True, "constrained": True}
        with pytest.raises(ModelError, match="Jacobiator"):
            loader.load_document(document)

    def test_orthonormality(self, loader):
        """A frame that is not orthonormal for the declared metric is refused."""
        document = loader.read(loader.resolve("carriage"))
        document["metric"] = copy.deepcopy(document["metric"])
        document["metric"][0][0] = "2*m"
        with pytest.raises(ModelError, match="not orthonormal"):
            loader.load_document(document)

    def test_framed_needs_parent(self, loader):
        """Framed models must name a parent."""
        with pytest.raises(ModelError, match="parent"):
            loader.load_document(toy_document(kind="framed"))

    def test_reference_cycle(self, tmp_path):
        """Two framed models naming each other as parents are refused."""
        for name, parent in (("left", "right"), ("right", "left")):
            document = {"name": name, "kind": "framed", "parent": parent, "frame": ["X1"], "frame_rows": [["1"]]}
            write_json(tmp_path / f"{name}.json", document)
        with pytest.raises(ModelError, match="cycle"):
            ModelLoader(search_paths=[tmp_path]).load("left")


class TestSerialization:
    """Test dumping and saving loaded models."""

    def test_dump_binds_parameters(self, loader):
        """Dumps carry the effective parameter values and canonical expressions."""
        document = loader.dump(loader.load("snakeboard_reduced", {"J1": 0.25}))
        assert document["parameters"]["J1"] == 0.25
        assert parse(document["anchor"][0][0]) == parse("1/sqrt(2*J1)")
        json.dumps(document)

    @pytest.mark.parametrize("suffix", [".json", ".yaml"])
    def test_save_and_reload(self, loader, tmp_path, suffix):
        """Saved models reload to the same algebroid."""
        original = loader.load("snakeboard_reduced", {"J1": 0.25})
        path = loader.save(original, tmp_path / f"copy{suffix}")
        if suffix == ".yaml":
            assert yaml.safe_load(path.read_text())["name"] == "snakeboard_reduced"
        reloaded = loader.load(path)
        q = original.algebroid.reference_point()
        np.testing.assert_allclose(reloaded.algebroid.anchor_at(q), original.algebroid.anchor_at(q))
        np.testing.assert_allclose(reloaded.algebroid.structure_at(q), original.algebroid.structure_at(q))
        assert reloaded.parameters == original.parameters

    @pytest.mark.parametrize("suffix", [".json", ".yaml"])
    def test_reload_keeps_expression_trees(self, loader, tmp_path, suffix):
        """Every expression reloads to the tree it was saved from, and saving again is stable."""
        original = loader.load("snakeboard_reduced", {"J1": 0.25})
        reloaded = loader.load(loader.save(original, tmp_path / f"copy{suffix}"))
        before, after = expression_slots(original.document), expression_slots(reloaded.document)
        assert before.keys() == after.keys()
        assert len(before) == 17
        for location, source in before.items():
            assert parse(after[location]) == parse(source), location
        assert loader.dump(reloaded) == loader.dump(original)
