import numpy as np
import pytest

from ifr.exceptions import BasisDomainError, DataValidationError, EstimationError, ShapeMismatchError
from ifr.fda.basis import BasisSpec, smooth
from ifr.fda.fda_core import (
    FunctionalDataset,
    FunctionalSample,
    center,
    eval_dataset_on_grid,
    eval_on_grid,
    l2_distance,
    mean_function,
    riemann_l2_norm,
)


class TestContainers:
    def test_coefficient_length_checked(self, cubic8):
        with pytest.raises(ShapeMismatchError):
            FunctionalSample(np.zeros(7), cubic8)

    def test_coefficients_are_copied_and_frozen(self, cubic8):
        coefs = np.zeros((2, 8))
        ds = FunctionalDataset(coefs, cubic8)
        coefs[0, 0] = 5.0
        assert ds.coefficients[0, 0] == 0.0
        with pytest.raises(ValueError):
            ds.coefficients[0, 0] = 1.0

    def test_from_samples_requires_one_basis(self, cubic8):
        other = BasisSpec.clamped((0.0, 1.0), num_basis=9, order=4)
        with pytest.raises(ShapeMismatchError):
            FunctionalDataset.from_samples([FunctionalSample(np.zeros(8), cubic8), FunctionalSample(np.zeros(9), other)])
        with pytest.raises(EstimationError):
            FunctionalDataset.from_samples([])

    def test_subset(self, cubic8):
        ds = FunctionalDataset(np.arange(24, dtype=float).reshape(3, 8), cubic8)
        sub = ds.subset([2, 0])
        np.testing.assert_array_equal(sub.coefficients[0], ds.coefficients[2])
        assert len(sub) == 2


class TestMeanAndCenter:
    def test_single_sample(self, cubic8):
        c = np.random.default_rng(0).normal(size=8)
        np.testing.assert_allclose(mean_function(FunctionalDataset(c[None, :], cubic8)).coefficients, c)

    def test_symmetric_pair(self, cubic8):
        c = np.random.default_rng(1).normal(size=8)
        mean = mean_function(FunctionalDataset(np.vstack([c, -c]), cubic8))
        np.testing.assert_allclose(mean.coefficients, 0.0, atol=1e-15)

    def test_mean_matches_pointwise_average(self, cubic8, grid100):
        ds = FunctionalDataset(np.random.default_rng(2).normal(size=(3, 8)), cubic8)
        expected = eval_dataset_on_grid(ds, grid100).mean(axis=0)
        np.testing.assert_allclose(eval_on_grid(mean_function(ds), grid100), expected, atol=1e-12)

    def test_empty_dataset(self, cubic8):
        with pytest.raises(EstimationError):
            mean_function(FunctionalDataset(np.zeros((0, 8)), cubic8))

    def test_center_twice(self, cubic8):
        ds = FunctionalDataset(np.random.default_rng(3).normal(size=(10, 8)), cubic8)
        once, mean = center(ds)
        twice, second_mean = center(once)
        np.testing.assert_allclose(twice.coefficients, once.coefficients, atol=1e-14)
        assert np.linalg.norm(second_mean.coefficients) < 1e-12
        np.testing.assert_allclose(once.coefficients.sum(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(mean.coefficients, ds.coefficients.mean(axis=0))

    def test_identical_samples_center_to_zero(self, cubic8):
        ds = FunctionalDataset(np.tile(np.arange(8.0), (4, 1)), cubic8)
        centered, _ = center(ds)
        np.testing.assert_allclose(centered.coefficients, 0.0, atol=1e-14)


class TestEvalOnGrid:
    def test_zero_and_unit_coefficients(self, cubic8, grid100):
        np.testing.assert_array_equal(eval_on_grid(FunctionalSample(np.zeros(8), cubic8), grid100), 0.0)
        np.testing.assert_allclose(eval_on_grid(FunctionalSample(np.ones(8), cubic8), grid100), 1.0, atol=1e-12)

    def test_bernstein_value(self):
        spec = BasisSpec.clamped((0.0, 1.0), num_basis=4, order=4)
        value = eval_on_grid(FunctionalSample(np.array([0.0, 0.0, 0.0, 1.0]), spec), [0.5])
        assert value[0] == pytest.approx(0.125, abs=1e-14)

    def test_linear_in_coefficients(self, cubic8, grid100):
        rng = np.random.default_rng(4)
        c1, c2 = rng.normal(size=8), rng.normal(size=8)
        combined = eval_on_grid(FunctionalSample(2.0 * c1 - 3.0 * c2, cubic8), grid100)
        separate = 2.0 * eval_on_grid(FunctionalSample(c1, cubic8), grid100) - 3.0 * eval_on_grid(
            FunctionalSample(c2, cubic8), grid100
        )
        np.testing.assert_allclose(combined, separate, atol=1e-12)

    def test_out_of_domain(self, cubic8):
        with pytest.raises(BasisDomainError):
            eval_on_grid(FunctionalSample(np.ones(8), cubic8), [0.5, 1.2])


class TestL2Distance:
    def test_identical_curves(self, cubic8, grid100):
        f = FunctionalSample(np.random.default_rng(5).normal(size=8), cubic8)
        assert l2_distance(f, f, grid100) == 0.0

    def test_constant_difference(self, cubic8, grid100):
        f = FunctionalSample(np.ones(8), cubic8)
        g = FunctionalSample(np.zeros(8), cubic8)
        assert l2_distance(f, g, grid100) == pytest.approx(1.0, abs=1e-12)

    def test_sine_difference(self, cubic8, grid100):
        f = FunctionalSample(smooth(cubic8, grid100, np.sin(2 * np.pi * grid100)), cubic8)
        g = FunctionalSample(np.zeros(8), cubic8)
        assert l2_distance(f, g, grid100) == pytest.approx(np.sqrt(0.5), abs=0.01)

    def test_symmetry_and_triangle_inequality(self, cubic8, grid100):
        rng = np.random.default_rng(6)
        for _ in range(20):
            f, g, h = (FunctionalSample(rng.normal(size=8), cubic8) for _ in range(3))
            assert l2_distance(f, g, grid100) == pytest.approx(l2_distance(g, f, grid100), abs=1e-12)
            assert l2_distance(f, h, grid100) <= l2_distance(f, g, grid100) + l2_distance(g, h, grid100) + 1e-9

    def test_unequal_spacing(self, cubic8):
        grid = np.array([0.0, 0.1, 0.3, 0.6, 1.0])
        f = FunctionalSample(np.ones(8), cubic8)
        with pytest.raises(DataValidationError):
            l2_distance(f, f, grid)

    def test_left_endpoint_rule(self):
        grid = np.linspace(0.0, 1.0, 5)
        values = np.array([[1.0, 1.0, 1.0, 1.0, 100.0]])
        # The last grid value never enters a left Riemann sum.
        np.testing.assert_allclose(riemann_l2_norm(values, grid), [1.0])
