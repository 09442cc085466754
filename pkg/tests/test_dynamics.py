"""Tests for integration, mechanical flows, Hamilton-Jacobi residuals and the snakeboard solution."""

import io
import math

import numpy as np
import pytest

from skewmech.algebroid import ExactSection, constant_section
from skewmech.dynamics import (
    MechanicalSystem,
    Trajectory,
    VelocityPoint,
    christoffel_symbols,
    closed_form_snakeboard,
    energy_drift,
    geodesic_el_flow,
    gradient_flow_defect,
    hamilton_flow,
    hamilton_jacobi_harness,
    hj_residual,
    nonholonomic_flow,
    projected_curve,
    projected_vf,
    quadratic_term,
    rk4_integrate,
    time_grid,
)
from skewmech.errors import DomainError, InputError, IntegrationError, PreconditionError
from skewmech.expr import parse
from skewmech.poisson import DualPoint

BUNDLED_MODELS = [
    "standard_tq_r2",
    "r2_counterexample",
    "beanie_reduced",
    "beanie_full",
    "carriage",
    "carriage_ambient",
    "snakeboard_reduced",
    "snakeboard_atiyah",
    "snakeboard_ambient",
]

FAMILY_CONSTANTS = {"C0": 1.0, "C1": 0.5, "C2": 0.2}


def snakeboard_start(params, constants):
    """Base point (phi, psi) of the analytic solution at t = 0."""
    solution = closed_form_snakeboard(params, constants, 0.0)
    return [float(solution.phi[0]), float(solution.psi[0])]


class TestTimeGrid:
    """Test the integration grid."""

    def test_uniform_grid(self):
        """dt divides the span."""
        np.testing.assert_allclose(time_grid((0.0, 1.0), 0.25), [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_short_final_step(self):
        """The last step is shortened to land on the end time."""
        grid = time_grid((0.0, 1.0), 0.3)
        np.testing.assert_allclose(grid, [0.0, 0.3, 0.6, 0.9, 1.0])
        assert grid[-1] == 1.0

    def test_many_steps_land_on_end(self):
        """Accumulated rounding does not add a sliver step."""
        grid = time_grid((0.0, 5.0), 1e-3)
        assert grid.size == 5001
        assert grid[-1] == 5.0

    @pytest.mark.parametrize("span,dt", [((1.0, 0.0), 0.1), ((0.0, 1.0), 0.0), ((0.0, float("inf")), 0.1)])
    def test_invalid(self, span, dt):
        """Backwards spans and non-positive steps are input errors."""
        with pytest.raises(InputError):
            time_grid(span, dt)


class TestRK4:
    """Test the fixed-step integrator."""

    def test_exponential(self):
        """dx/dt = x from 1 reaches e at t = 1."""
        trajectory = rk4_integrate(lambda t, x: x, [1.0], (0.0, 1.0), 1e-2)
        assert trajectory.final_state[0] == pytest.approx(math.e, abs=1e-9)

    def test_fourth_order_on_harmonic_oscillator(self):
        """Halving the step divides the error by about 16."""

        def rhs(t, x):
            return np.array([x[1], -x[0]])

        errors = []
        for dt in (0.2, 0.1):
            final = rk4_integrate(rhs, [1.0, 0.0], (0.0, 2.0), dt).final_state
            errors.append(abs(final[0] - math.cos(2.0)))
        assert math.log2(errors[0] / errors[1]) >= 3.5

    def test_failure_reports_time(self):
        """A failing right-hand side aborts with the time of failure."""

        def rhs(t, x):
            if t > 0.5:
                raise DomainError("sqrt of negative value")
            return np.ones(1)

        with pytest.raises(IntegrationError) as exc_info:
            rk4_integrate(rhs, [0.0], (0.0, 1.0), 0.1)
        assert exc_info.value.time == pytest.approx(0.55)

    def test_blow_up(self):
        """Non-finite states abort the integration."""
        with pytest.raises(IntegrationError, match="not finite"):
            rk4_integrate(lambda t, x: x**2, [1.0], (0.0, 2.0), 0.1)


class TestTrajectory:
    """Test trajectory export."""

    def test_header_and_columns(self):
        """Dual layouts name base columns q and fiber columns p."""
        states = np.arange(10.0).reshape(2, 5)
        trajectory = Trajectory(np.array([0.0, 0.1]), states, layout="dual", m=2)
        assert trajectory.header() == ["t", "q1", "q2", "p1", "p2", "p3"]
        np.testing.assert_array_equal(trajectory.column("p2"), [3.0, 8.0])
        np.testing.assert_array_equal(trajectory.column("t"), [0.0, 0.1])
        with pytest.raises(InputError):
            trajectory.column("v1")

    def test_velocity_and_base_headers(self):
        """Velocity layouts use v; base curves have only q columns."""
        velocity = Trajectory(np.array([0.0]), np.zeros((1, 3)), layout="velocity", m=1)
        base = Trajectory(np.array([0.0]), np.zeros((1, 2)), layout="base", m=2)
        assert velocity.header() == ["t", "q1", "v1", "v2"]
        assert base.header() == ["t", "q1", "q2"]

    def test_csv_keeps_full_precision(self):
        """Values are written with 17 significant digits."""
        trajectory = Trajectory(np.array([0.0, 0.1]), np.array([[1.0 / 3.0], [math.pi]]), layout="base", m=1)
        stream = io.StringIO()
        trajectory.to_csv(stream)
        lines = stream.getvalue().splitlines()
        assert lines[0] == "t,q1"
        assert float(lines[2].split(",")[1]) == math.pi
        assert float(lines[1].split(",")[1]) == 1.0 / 3.0

    def test_write_csv(self, tmp_path):
        """Trajectories can be written to a file."""
        trajectory = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 2)), layout="velocity", m=1)
        path = tmp_path / "run.csv"
        trajectory.write_csv(path)
        assert path.read_text().splitlines()[0] == "t,q1,v1"

    def test_validation(self):
        """Layouts, shapes and time order are validated."""
        with pytest.raises(InputError):
            Trajectory(np.array([0.0]), np.zeros((1, 1)), layout="phase")
        with pytest.raises(InputError):
            Trajectory(np.array([0.0, 1.0]), np.zeros((1, 1)))
        with pytest.raises(InputError):
            Trajectory(np.array([1.0, 0.0]), np.zeros((2, 1)))


class TestMechanicalSystem:
    """Test energies, Hamiltonians and flows."""

    def test_energy_and_hamiltonian(self, beanie):
        """Both equal 1/2 |v|^2 + V(q) in an orthonormal frame."""
        system = beanie.system
        psi = 0.7
        potential = 0.1 * (1.0 - math.cos(psi))
        state = VelocityPoint.of([psi], [1.0, 0.0, 2.0, 0.0])
        assert system.energy(state) == pytest.approx(2.5 + potential)
        assert system.hamiltonian()(DualPoint.of([psi], [1.0, 0.0, 2.0, 0.0])) == pytest.approx(2.5 + potential)

    def test_unknown_potential_names(self, beanie):
        """A potential naming an unknown symbol is rejected."""
        with pytest.raises(InputError, match="unknown names"):
            MechanicalSystem(beanie.algebroid, parse("g*psi"))

    def test_quadratic_term_from_christoffel_symbols(self, snakeboard, rng):
        """Contracting the symmetric connection reproduces the Euler-Lagrange quadratic term."""
        structure = snakeboard.algebroid.structure_at([0.4, 0.0])
        gamma = christoffel_symbols(structure)
        v = rng.normal(size=3)
        np.testing.assert_allclose(np.einsum("ebc,b,c->e", gamma, v, v), quadratic_term(structure, v), atol=1e-12)

    def test_euler_lagrange_matches_hamilton(self, snakeboard):
        """With an identity Legendre map the velocity and momentum flows coincide."""
        system = snakeboard.system
        start = np.array([0.3, 0.0, 0.4, -0.2, 0.9])
        dual = hamilton_flow(system.algebroid, system.hamiltonian(), start, (0.0, 1.0), 1e-2)
        velocity = geodesic_el_flow(system, start, (0.0, 1.0), 1e-2)
        assert dual.header()[3:] == ["p1", "p2", "p3"]
        assert velocity.header()[3:] == ["v1", "v2", "v3"]
        np.testing.assert_allclose(dual.states, velocity.states, atol=1e-7)

    def test_nonholonomic_flow_requires_constraint_algebroid(self, beanie, snakeboard):
        """Lagrange-D'Alembert flows run on D only."""
        with pytest.raises(PreconditionError):
            nonholonomic_flow(beanie.system, np.zeros(5), (0.0, 1.0), 0.1)
        with pytest.raises(InputError):
            nonholonomic_flow(snakeboard.system, np.zeros(4), (0.0, 1.0), 0.1)

    def test_snakeboard_momentum_exchange(self, snakeboard):
        """At phi = 0 with v = (1, 0, 1) the second velocity starts decreasing at rate 1."""
        system = snakeboard.system
        derivative = system.velocity_field(0.0, np.array([0.0, 0.0, 1.0, 0.0, 1.0]))
        np.testing.assert_allclose(derivative[2:], [0.0, -1.0, 0.0], atol=1e-12)

    @pytest.mark.acceptance
    @pytest.mark.slow
    @pytest.mark.parametrize("name", BUNDLED_MODELS)
    def test_energy_conservation(self, loader, name):
        """Energy drifts by at most 1e-8 over five time units for Hamilton and Lagrange-D'Alembert flows."""
        model = loader.load(name)
        algebroid = model.algebroid
        q0 = algebroid.reference_point()
        start = np.concatenate([q0, np.full(algebroid.n, 0.05)])
        h = model.system.hamiltonian()
        trajectory = hamilton_flow(algebroid, h, start, (0.0, 5.0), 1e-3)
        assert energy_drift(model.system, trajectory, h) <= 1e-8

        constrained = model.constrained_algebroid()
        if not constrained.constrained:
            return
        system = MechanicalSystem(constrained, model.system.potential, name)
        start = np.concatenate([q0, np.full(constrained.n, 0.05)])
        trajectory = nonholonomic_flow(system, start, (0.0, 5.0), 1e-3)
        assert energy_drift(system, trajectory) <= 1e-8


class TestHamiltonJacobi:
    """Test Hamilton-Jacobi residuals and the lift harness."""

    def test_beanie_family_solves_hj(self, beanie):
        """h o alpha is constant for the beanie family."""
        h = beanie.system.hamiltonian()
        section = beanie.section("hj_family")
        np.testing.assert_allclose(hj_residual(beanie.algebroid, h, section, [0.3]), 0.0, atol=1e-8)

    def test_shifted_family_residual(self, beanie):
        """Adding 0.2 psi to alpha_4 gives residual sqrt(2) (k2 + 0.2 psi) 0.2 along X1."""
        h = beanie.system.hamiltonian()
        section = beanie.section("hj_family").shifted(3, parse("0.2*psi"))
        residual = hj_residual(beanie.algebroid, h, section, [0.3])
        assert residual[0] == pytest.approx(math.sqrt(2.0) * 0.36 * 0.2, abs=1e-7)
        np.testing.assert_allclose(residual[1:], 0.0, atol=1e-12)

    @pytest.mark.acceptance
    def test_residuals_at_random_points(self, loader):
        """HJ residual stays below 1e-7 at 100 random points for both families."""
        rng = np.random.default_rng(3)
        snakeboard = loader.load("snakeboard_reduced")
        beanie = loader.load("beanie_reduced")
        cases = [
            (snakeboard, snakeboard.section("paper_family")),
            (beanie, beanie.section("hj_family").with_constants(k1=1.0)),
        ]
        for model, section in cases:
            h = model.system.hamiltonian()
            for q in model.algebroid.sample_points(rng, 100):
                assert np.max(np.abs(hj_residual(model.algebroid, h, section, q))) <= 1e-7

    def test_projected_vector_field(self, loader):
        """For h = |p|^2 / 2 the projected field is rho applied to alpha(q)."""
        plane = loader.load("standard_tq_r2")
        section = constant_section(plane.algebroid, [1.0, -2.0])
        field = projected_vf(plane.algebroid, plane.system.hamiltonian(), section, [0.5, 0.5])
        np.testing.assert_allclose(field, [1.0, -2.0], atol=1e-8)

        snakeboard = loader.load("snakeboard_reduced")
        section = snakeboard.section("paper_family")
        field = projected_vf(snakeboard.algebroid, snakeboard.system.hamiltonian(), section, [0.3, 0.0])
        assert field[0] == pytest.approx(FAMILY_CONSTANTS["C0"], abs=1e-8)

    def test_gradient_flow_defect(self, snakeboard):
        """For alpha = d^D S the projected field is the anchored gradient of S."""
        assert gradient_flow_defect(snakeboard.system, parse("phi*psi + sin(phi)"), [0.3, 0.5]) <= 1e-8
        section = ExactSection(snakeboard.algebroid, parse("phi*psi"))
        assert section.components_at([0.3, 0.5]).shape == (3,)

    @pytest.mark.acceptance
    @pytest.mark.slow
    def test_harness_both_directions(self, loader):
        """Lift of the projected curve follows the Hamilton flow only for a true solution."""
        model = loader.load("snakeboard_reduced")
        algebroid = model.algebroid
        h = model.system.hamiltonian()
        section = model.section("paper_family")
        q0 = algebroid.reference_point()
        report = hamilton_jacobi_harness(algebroid, h, section, q0, (0.0, 5.0), 1e-3)
        assert report.max_lift_defect <= 1e-6
        assert report.max_hj_residual <= 1e-7
        assert report.cocycle_ok

        perturbed = hamilton_jacobi_harness(algebroid, h, section.scaled(2, 1.1), q0, (0.0, 5.0), 1e-3)
        assert perturbed.max_lift_defect > 1e-3
        assert perturbed.max_hj_residual > 100.0 * report.max_hj_residual
        assert perturbed.as_dict()["samples"] == perturbed.samples

    @pytest.mark.acceptance
    @pytest.mark.slow
    @pytest.mark.parametrize(
        ("component", "factor"),
        [
            (1, 0.9),
            (1, 0.95),
            (1, 1.01),
            (1, 1.05),
            (1, 1.1),
            (2, 0.9),
            (2, 0.95),
            (2, 1.01),
            (2, 1.1),
            (1, 1.0),
            (2, 1.0),
        ],
    )
    def test_lift_defect_tracks_hj_residual(self, loader, component, factor):
        """Over a family of rescaled sections the lift fails exactly when the HJ equation does, at 1e-4."""
        model = loader.load("snakeboard_reduced")
        algebroid = model.algebroid
        section = model.section("paper_family").scaled(component, factor)
        report = hamilton_jacobi_harness(
            algebroid, model.system.hamiltonian(), section, algebroid.reference_point(), (0.0, 5.0), 1e-3
        )
        assert (report.max_lift_defect > 1e-4) == (report.max_hj_residual > 1e-4)
        assert (report.max_hj_residual > 1e-4) == (factor != 1.0)


class TestClosedFormSnakeboard:
    """Test the analytic snakeboard solution against the projected curve."""

    @pytest.mark.acceptance
    def test_matches_projected_curve(self, loader):
        """RK4 integration of the projected field matches phi(t), psi(t) to 1e-6 on [0, 5]."""
        model = loader.load("snakeboard_reduced")
        params = model.parameters
        constants = [1.0, 0.5, 0.2, 0.3, 0.0]
        section = model.section("paper_family").with_constants(**FAMILY_CONSTANTS)
        curve = projected_curve(
            model.algebroid, model.system.hamiltonian(), section, snakeboard_start(params, constants), (0.0, 5.0), 1e-3
        )
        exact = closed_form_snakeboard(params, constants, curve.times)
        assert np.max(np.abs(curve.column("q1") - exact.phi)) <= 1e-6
        assert np.max(np.abs(curve.column("q2") - exact.psi)) <= 1e-6

    @pytest.mark.acceptance
    def test_linear_branch(self, loader):
        """With C0 = 0 the angles move linearly and match to 1e-9."""
        model = loader.load("snakeboard_reduced")
        params = model.parameters
        constants = [0.0, 0.5, 0.2, 0.3, 0.1]
        section = model.section("paper_family").with_constants(C0=0.0, C1=0.5, C2=0.2)
        curve = projected_curve(
            model.algebroid, model.system.hamiltonian(), section, snakeboard_start(params, constants), (0.0, 5.0), 1e-2
        )
        exact = closed_form_snakeboard(params, constants, curve.times)
        assert np.max(np.abs(curve.column("q1") - exact.phi)) <= 1e-9
        assert np.max(np.abs(curve.column("q2") - exact.psi)) <= 1e-9

    @pytest.mark.acceptance
    def test_convergence_order(self, loader):
        """The measured RK4 order against the analytic solution is at least 3.5."""
        model = loader.load("snakeboard_reduced")
        params = model.parameters
        constants = [1.0, 0.5, 0.2, 0.3, 0.0]
        section = model.section("paper_family")
        h = model.system.hamiltonian()
        errors = []
        for dt in (0.2, 0.1):
            curve = projected_curve(model.algebroid, h, section, snakeboard_start(params, constants), (0.0, 2.0), dt)
            exact = closed_form_snakeboard(params, constants, curve.times)
            errors.append(float(np.max(np.abs(curve.column("q2") - exact.psi))))
        assert math.log2(errors[0] / errors[1]) >= 3.5

    def test_velocities(self, loader):
        """Frame velocities are the section components along the curve."""
        model = loader.load("snakeboard_reduced")
        params = model.parameters
        solution = closed_form_snakeboard(params, [1.0, 0.5, 0.2, 0.3, 0.0], [0.0, 0.7])
        section = model.section("paper_family")
        for k, phi in enumerate(solution.phi):
            expected = section.components_at([phi, solution.psi[k]])
            actual = [solution.v1[k], solution.v2[k], solution.v3[k]]
            np.testing.assert_allclose(actual, expected, atol=1e-12)

    def test_invalid_inputs(self):
        """Missing or non-positive parameters and wrong constant counts are input errors."""
        params = {"J0": 0.5, "J1": 0.1875, "m": 1.0, "r": 1.0}
        with pytest.raises(InputError):
            closed_form_snakeboard({"J0": 0.5}, [1.0, 0.5, 0.2, 0.3, 0.0], 1.0)
        with pytest.raises(InputError):
            closed_form_snakeboard({**params, "m": 0.0}, [1.0, 0.5, 0.2, 0.3, 0.0], 1.0)
        with pytest.raises(InputError):
            closed_form_snakeboard(params, [1.0, 0.5], 1.0)
        with pytest.raises(DomainError):
            closed_form_snakeboard({**params, "J0": 2.0}, [0.0, 0.5, 0.2, 1.2, 0.0], 1.0)
