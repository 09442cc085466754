"""End-to-end tests of the skewmech command line."""

import csv
import json

import pytest

from skewmech.cli import SkewMechCLI

pytestmark = pytest.mark.integration


@pytest.fixture
def cli():
    return SkewMechCLI()


def run_json(cli, capsys, *args):
    """Run with --json and return (exit code, parsed stdout)."""
    code = cli.run(["--json", *args])
    return code, json.loads(capsys.readouterr().out)


class TestGeneral:
    """Test the parser, listing and exit codes."""

    def test_no_command(self, cli, capsys):
        """Without a command the help is printed and the input code returned."""
        assert cli.run([]) == 2
        assert "usage" in capsys.readouterr().out

    def test_unknown_command(self, cli):
        """argparse errors map to exit code 2."""
        assert cli.run(["plot"]) == 2

    def test_models(self, cli, capsys):
        """The listing shows every bundled model with its ranks and flags."""
        assert cli.run(["models"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("Available models:")
        assert "snakeboard_reduced" in out
        assert "m=2 n=3 [constrained]" in out

    def test_models_json(self, cli, capsys):
        """JSON listings carry the same fields."""
        code, rows = run_json(cli, capsys, "models")
        assert code == 0
        by_name = {row["name"]: row for row in rows}
        assert by_name["beanie_full"]["flags"] == ["lie", "morphism"]
        assert by_name["carriage_ambient"]["n"] == 5

    def test_bad_config_file(self, cli, tmp_path):
        """Unknown commands in the config file are input errors."""
        config = tmp_path / "run.yaml"
        config.write_text("plot:\n  dt: 1\n")
        assert cli.run(["--config", str(config), "models"]) == 2


class TestSimulate:
    """Test the simulate command."""

    def test_hamilton_to_file(self, cli, capsys, tmp_path):
        """A conservative run writes a CSV and reports the drift."""
        output = tmp_path / "run.csv"
        args = ["simulate", "-m", "beanie_reduced", "--x0", "psi=0.3,p1=0.2,p3=0.1", "--t", "1", "--dt", "0.01"]
        assert cli.run([*args, "-o", str(output)]) == 0
        with output.open() as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["t", "q1", "p1", "p2", "p3", "p4"]
        assert len(rows) == 102
        assert float(rows[1][2]) == 0.2
        assert "energy_drift" in capsys.readouterr().out

    def test_csv_on_stdout(self, cli, capsys):
        """Without --output the CSV goes to stdout and the summary to stderr."""
        args = ["simulate", "-m", "snakeboard_reduced", "--flow", "lagrange", "--x0", "phi=0.3,psi=0,v1=0.5"]
        assert cli.run([*args, "--t", "0.1", "--dt", "0.01"]) == 0
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0] == "t,q1,q2,v1,v2,v3"
        assert "simulate snakeboard_reduced" in captured.err

    def test_config_file_defaults(self, cli, capsys, tmp_path):
        """Config-file values fill options that were not given."""
        config = tmp_path / "run.yaml"
        config.write_text("simulate:\n  t: 0.2\n  dt: 0.1\n")
        args = ["--config", str(config), "simulate", "-m", "beanie_reduced", "--x0", "psi=0"]
        assert cli.run(args) == 0
        assert len(capsys.readouterr().out.splitlines()) == 4

    def test_nonholonomic_on_ambient(self, cli, capsys):
        """Lagrange-D'Alembert runs restrict an ambient frame to D first."""
        args = ["simulate", "-m", "carriage_ambient", "--flow", "nonholonomic", "--x0"]
        args += ["x=0,y=0,theta=0.2,psi1=0,psi2=0,v1=0.1,v2=0.1", "--t", "0.1", "--dt", "0.01"]
        assert cli.run(args) == 0
        assert capsys.readouterr().out.splitlines()[0].endswith("v1,v2")

    def test_nonholonomic_needs_constraints(self, cli, capsys):
        """Models without a constraint algebroid fail numerically."""
        args = ["simulate", "-m", "beanie_reduced", "--flow", "nonholonomic", "--x0", "psi=0,v1=1"]
        assert cli.run(args) == 3
        assert "not a constraint algebroid" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "x0", ["psi=0,q7=1", "p1=1", "psi=0,v1=1"], ids=["unknown-name", "missing-base", "wrong-prefix"]
    )
    def test_invalid_initial_state(self, cli, x0):
        """Unknown names and missing coordinates are input errors."""
        assert cli.run(["simulate", "-m", "beanie_reduced", "--x0", x0, "--t", "0.1", "--dt", "0.01"]) == 2

    def test_unknown_parameter(self, cli, capsys):
        """Overrides must name model parameters."""
        assert cli.run(["simulate", "-m", "beanie_reduced", "--param", "Q=1", "--x0", "psi=0"]) == 2
        assert "unknown parameters" in capsys.readouterr().err

    def test_repeated_run_is_identical(self, cli, capsys):
        """The same invocation prints the same CSV byte for byte."""
        args = ["simulate", "-m", "snakeboard_reduced", "--flow", "nonholonomic"]
        args += ["--x0", "phi=0.3,psi=0,v1=1,v2=1,v3=1", "--t", "1", "--dt", "0.01"]
        outputs = []
        for _ in range(2):
            assert cli.run(args) == 0
            outputs.append(capsys.readouterr().out)
        assert outputs[0].startswith("t,q1,q2,v1,v2,v3")
        assert outputs[0] == outputs[1]


class TestCheck:
    """Test the Hamilton-Jacobi check command."""

    ARGS = ["check", "-m", "snakeboard_reduced", "--section", "paper_family", "--t", "1", "--dt", "0.01"]

    def test_true_family_passes(self, cli, capsys):
        """The analytic family passes every residual."""
        code, report = run_json(cli, capsys, *self.ARGS, "--samples", "5")
        assert code == 0
        assert report["status"] == "pass"
        assert report["max_hj_residual"] <= 1e-6

    def test_perturbed_family_fails(self, cli, capsys):
        """Scaling a component breaks the HJ equation."""
        code, report = run_json(cli, capsys, *self.ARGS, "--samples", "5", "--perturb", "alpha3*=1.1")
        assert code == 1
        assert report["status"] == "fail"

    def test_constants(self, cli, capsys):
        """Family constants can be changed, unknown ones are rejected."""
        code, _ = run_json(cli, capsys, *self.ARGS, "--samples", "3", "--const", "C1=0.3,C2=-0.1")
        assert code == 0
        assert cli.run([*self.ARGS, "--const", "C9=1"]) == 2

    @pytest.mark.parametrize("perturbation", ["alpha9*=2", "beta1*=2", "alpha1*=x"])
    def test_malformed_perturbation(self, cli, perturbation):
        """Perturbations must name an existing component and a numeric factor."""
        assert cli.run([*self.ARGS, "--perturb", perturbation]) == 2

    def test_missing_section(self, cli, capsys):
        """Unknown sections are input errors."""
        assert cli.run(["check", "-m", "carriage", "--section", "missing"]) == 2
        assert "no section" in capsys.readouterr().err


class TestAnalyze:
    """Test the nonholonomy analysis command."""

    def test_counterexample_points(self, cli, capsys, tmp_path):
        """Explicit points on and off the axis give different ranks."""
        output = tmp_path / "ranks.csv"
        args = ["analyze", "-m", "r2_counterexample", "--points", "x=1,y=1;x=1,y=0", "-o", str(output)]
        assert cli.run(args) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "verdict: rank_deficient"
        assert output.read_text().splitlines()[2].startswith("1,0,1-1,1,rank_deficient")

    def test_ambient_is_restricted(self, cli, capsys):
        """Ambient frames are analysed on their constraint block."""
        code, report = run_json(cli, capsys, "analyze", "-m", "snakeboard_ambient", "--samples", "4")
        assert code == 0
        assert report["verdict"] == "completely_nonholonomic"
        assert report["stabilized_ranks"] == [2] * 4

    def test_incomplete_point(self, cli):
        """Points must give every coordinate."""
        assert cli.run(["analyze", "-m", "r2_counterexample", "--points", "x=1"]) == 2

    def test_seeded_samples_are_reproducible(self, cli, capsys, tmp_path):
        """A fixed seed writes byte-identical rank files."""
        paths = [tmp_path / "first.csv", tmp_path / "second.csv"]
        for path in paths:
            assert cli.run(["analyze", "-m", "carriage", "--samples", "5", "--seed", "7", "-o", str(path)]) == 0
        capsys.readouterr()
        assert len(paths[0].read_text().splitlines()) == 6
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestMorphism:
    """Test the morphism command."""

    def test_quotient_passes(self, cli, capsys):
        """The beanie quotient is a Hamiltonian morphism and transfers the HJ family."""
        code, report = run_json(cli, capsys, "morphism", "-m", "beanie_full", "--grid", "5")
        assert code == 0
        assert report["status"] == "pass"
        assert report["transferred_section"] == "hj_family"
        assert report["max_round_trip"] <= 1e-9

    def test_scaled_row_fails(self, cli, capsys):
        """Doubling a fiber row is detected."""
        code, report = run_json(cli, capsys, "morphism", "-m", "beanie_full", "--grid", "5", "--scale-row", "2")
        assert code == 1
        assert report["max_bracket_defect"] > 1e-2

    def test_identity(self, cli, capsys):
        """Models without a morphism block can self-test with the identity."""
        assert cli.run(["morphism", "-m", "carriage", "--grid", "3"]) == 2
        capsys.readouterr()
        code, report = run_json(cli, capsys, "morphism", "-m", "carriage", "--grid", "3", "--identity")
        assert code == 0
        assert report["max_bracket_defect"] == 0.0


class TestBracketTable:
    """Test the bracket table command."""

    def test_snakeboard_entries(self, cli, capsys):
        """{p1, p2} = kappa p3 = 1 at phi = 0 with J1 = 1/4."""
        args = ["bracket-table", "-m", "snakeboard_reduced", "--param", "J1=0.25", "--point", "phi=0,psi=0"]
        code, table = run_json(cli, capsys, *args)
        assert code == 0
        assert table["labels"] == ["phi", "psi", "p1", "p2", "p3"]
        assert table["matrix"][2][3] == pytest.approx(1.0)
        assert table["matrix"][0][2] == pytest.approx(2.0**0.5)

    def test_text_table(self, cli, capsys):
        """The text form has a header row and one row per coordinate function."""
        assert cli.run(["bracket-table", "-m", "standard_tq_r2", "--momenta", "p1=0"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 5
        assert lines[0].split() == ["{.,.}", "x", "y", "p1", "p2"]

    def test_unknown_momentum(self, cli):
        """Momenta are named p1..pn."""
        assert cli.run(["bracket-table", "-m", "standard_tq_r2", "--momenta", "p3=1"]) == 2
