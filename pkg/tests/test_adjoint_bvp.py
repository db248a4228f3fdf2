import math

import numpy as np
import pytest

from gradpce.adjoint_bvp import (
    BvpSolution,
    DiffusionModel,
    build_surrogate,
    qoi_and_gradient,
    reference_moments,
    run_bvp_benchmark,
    solve_bvp,
)
from gradpce.sampling import generator


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError, match="dim"):
            DiffusionModel(dim=0)
        with pytest.raises(ValueError, match="64 cells"):
            DiffusionModel(dim=1, cells=32)
        with pytest.raises(ValueError, match="qoi"):
            DiffusionModel(dim=1, qoi="max")
        with pytest.raises(ValueError, match="even cell count"):
            DiffusionModel(dim=1, cells=65, qoi="midpoint")
        with pytest.raises(ValueError, match="corr_length"):
            DiffusionModel(dim=1, corr_length=0.0)
        with pytest.raises(ValueError, match="constant"):
            DiffusionModel.constant(-1.0)

    def test_decay_weights_strictly_decreasing_in_frequency(self):
        model = DiffusionModel(dim=9)
        weights = model.decay_weights()
        # Parameters 2..9 use frequencies 1,1,2,2,3,3,4,4.
        per_frequency = weights[::2]
        assert np.all(np.diff(per_frequency) < 0.0)
        assert np.array_equal(weights[::2][: len(weights[1::2])], weights[1::2])

    def test_coefficient_above_half(self):
        model = DiffusionModel(dim=4, cells=64)
        nodes = model.nodes()
        rng = generator(99)
        for _ in range(1000):
            xi = rng.uniform(-1.0, 1.0, size=4)
            assert model.coefficient(nodes, xi).min() > 0.5

    def test_constant_model_coefficient(self):
        model = DiffusionModel.constant(2.5, dim=3, cells=64)
        nodes = model.nodes()
        xi = np.array([0.3, -0.9, 0.5])
        np.testing.assert_array_equal(model.coefficient(nodes, xi), 2.5)
        np.testing.assert_array_equal(model.coefficient_sensitivity(nodes, xi), 0.0)

    def test_profiles_first_parameter_constant(self):
        model = DiffusionModel(dim=3)
        rows = model.profiles(np.linspace(0.0, 1.0, 7))
        expected = math.sqrt(math.sqrt(math.pi) * model.corr_length / 2.0)
        np.testing.assert_allclose(rows[0], expected)
        # Second parameter: lowest sine mode, zero at both ends.
        assert abs(rows[1][0]) < 1e-15 and abs(rows[1][-1]) < 1e-15
        # Third parameter: lowest cosine mode, +/- amplitude at the ends.
        np.testing.assert_allclose(rows[2][0], -rows[2][-1])


class TestSolve:
    def test_analytic_constant_case(self):
        # a = 1, g = 1: u = y(1-y)/2, average = 1/12 up to the trapezoid bias.
        model = DiffusionModel.constant(1.0, cells=4096, load=lambda y: np.ones_like(y))
        solution = solve_bvp(model, [0.0])
        nodes = model.nodes()
        np.testing.assert_allclose(solution.u, nodes * (1.0 - nodes) / 2.0, atol=1e-12)
        assert abs(solution.qoi - 1.0 / 12.0) <= 1e-8
        np.testing.assert_array_equal(solution.gradient, 0.0)

    def test_midpoint_qoi_constant_case(self):
        model = DiffusionModel.constant(
            1.0, cells=1024, load=lambda y: np.ones_like(y), qoi="midpoint"
        )
        solution = solve_bvp(model, [0.0])
        assert abs(solution.qoi - 1.0 / 8.0) <= 1e-12

    def test_boundary_values_exact_zero(self):
        model = DiffusionModel(dim=3, cells=64)
        solution = solve_bvp(model, [0.4, -0.2, 0.9])
        assert solution.u[0] == 0.0 and solution.u[-1] == 0.0

    def test_deterministic(self):
        model = DiffusionModel(dim=2, cells=128)
        first = solve_bvp(model, [0.1, -0.7])
        second = solve_bvp(model, [0.1, -0.7])
        assert first.qoi == second.qoi
        np.testing.assert_array_equal(first.gradient, second.gradient)

    def test_parameter_validation(self):
        model = DiffusionModel(dim=2, cells=64)
        with pytest.raises(ValueError, match="expected 2 parameters"):
            solve_bvp(model, [0.1])
        with pytest.raises(ValueError, match="lie in"):
            solve_bvp(model, [0.0, 1.5])

    def test_mesh_convergence_second_order(self):
        xi = np.array([0.37, -0.81, 0.52])
        values = {}
        for cells in (64, 128, 256, 512):
            model = DiffusionModel(dim=3, cells=cells)
            values[cells] = solve_bvp(model, xi).qoi
        coarse = values[64] - values[128]
        fine = values[128] - values[256]
        finest = values[256] - values[512]
        assert coarse / fine == pytest.approx(4.0, rel=0.2)
        assert fine / finest == pytest.approx(4.0, rel=0.2)

    def test_adjoint_gradient_matches_finite_differences(self):
        rng = generator(7)
        step = 1e-5
        for trial in range(20):
            dim = int(rng.integers(1, 5))
            cells = int(rng.choice([64, 128]))
            qoi = "average" if trial % 2 == 0 else "midpoint"
            model = DiffusionModel(dim=dim, cells=cells, qoi=qoi)
            xi = rng.uniform(-0.99, 0.99, size=dim)
            _, gradient = qoi_and_gradient(model, xi)
            fd = np.zeros(dim)
            for axis in range(dim):
                shift = np.zeros(dim)
                shift[axis] = step
                plus = solve_bvp(model, xi + shift).qoi
                minus = solve_bvp(model, xi - shift).qoi
                fd[axis] = (plus - minus) / (2.0 * step)
            assert np.linalg.norm(gradient - fd) <= 1e-6 * np.linalg.norm(fd)

    def test_solution_type_guards_boundaries(self):
        with pytest.raises(ValueError, match="boundary"):
            BvpSolution(np.linspace(0, 1, 3), np.array([0.1, 0.2, 0.0]), 0.0, np.zeros(1))


class TestSurrogate:
    def test_constant_model_has_zero_std(self):
        model = DiffusionModel.constant(1.0, dim=2, cells=64)
        result = build_surrogate(model, degree=3, n_samples=15, seed=3)
        assert result.std <= 1e-10
        # The denoising epsilon shrinks the constant term by up to ~1e-9.
        assert result.mean == pytest.approx(solve_bvp(model, [0.0, 0.0]).qoi, abs=1e-8)

    def test_gradient_enhanced_matches_reference_moments(self):
        model = DiffusionModel(dim=2, cells=64)
        ref_mean, ref_std = reference_moments(model)
        result = build_surrogate(model, degree=4, n_samples=12, seed=11)
        assert result.mean == pytest.approx(ref_mean, abs=5e-4)
        assert result.std == pytest.approx(ref_std, abs=5e-3)

    def test_mode_guard(self):
        model = DiffusionModel(dim=1, cells=64)
        with pytest.raises(ValueError, match="mode"):
            build_surrogate(model, 2, 5, mode="turbo")

    def test_reference_moments_match_monte_carlo(self):
        model = DiffusionModel(dim=2, cells=64)
        mean, std = reference_moments(model)
        rng = generator(123)
        points = rng.uniform(-1.0, 1.0, size=(20_000, 2))
        values = np.array([solve_bvp(model, row).qoi for row in points])
        standard_error = values.std(ddof=1) / math.sqrt(values.size)
        assert abs(values.mean() - mean) <= 3.0 * standard_error
        assert std == pytest.approx(values.std(ddof=1), rel=0.05)

    def test_reference_moments_dim_cap(self):
        with pytest.raises(ValueError, match="capped"):
            reference_moments(DiffusionModel(dim=4, cells=64))


class TestBenchmark:
    def test_table_layout_and_improvement(self):
        model = DiffusionModel(dim=2, cells=64)
        table = run_bvp_benchmark(model, degree=4, sample_grid=(6, 12), seed=5)
        assert table.columns == ("mode", "N", "mean_error", "std_error")
        assert len(table.rows) == 4
        errors = {(row[0], row[1]): row[2] for row in table.rows}
        assert errors[("gradient-enhanced", 12)] <= errors[("standard", 12)]

    def test_input_guards(self):
        model = DiffusionModel(dim=1, cells=64)
        with pytest.raises(ValueError, match="sample_grid"):
            run_bvp_benchmark(model, 2, ())
        with pytest.raises(ValueError, match="trials"):
            run_bvp_benchmark(model, 2, (5,), trials=0)

    def test_deterministic(self):
        model = DiffusionModel(dim=1, cells=64)
        first = run_bvp_benchmark(model, 3, (8,), seed=2).to_csv()
        second = run_bvp_benchmark(model, 3, (8,), seed=2).to_csv()
        assert first == second
