from dataclasses import replace

import numpy as np
import pytest

from ifr.exceptions import ConfigurationError, EstimationError, ShapeMismatchError
from ifr.fda.basis import basis_matrix
from ifr.fda.fda_core import FunctionalSample
from ifr.fda.interval_fd import from_discrete
from ifr.fda.interval_models import (
    ModelKind,
    ModelOptions,
    ResidualPool,
    fit,
    mcm_prediction_band,
    predict_limits,
    predict_limits_detailed,
    replicate_seeds,
)
from ifr.models.run_models import SIM_CASES, SimConfig
from ifr.services.simulation import generate, gp_sample, riemann_integral_operator

ALL_KINDS = list(ModelKind)
FAST = ModelOptions(mcm_replicates=4, seed=5)


def _split(data, n_train):
    train, test = np.arange(n_train), np.arange(n_train, len(data.Y))
    return (
        data.Y.subset(train), [x.subset(train) for x in data.X],
        data.Y.subset(test), [x.subset(test) for x in data.X],
    )


@pytest.fixture
def degenerate(cubic8):
    """Zero-width intervals: lower = upper for response and both predictors."""
    rng = np.random.default_rng(0)
    grid = np.linspace(0.0, 1.0, 40)
    phi = basis_matrix(cubic8, grid)
    x_values = [rng.normal(size=(30, 8)) @ phi.T for _ in range(2)]
    y_values = x_values[0] * 0.5 - x_values[1] + 0.1 * rng.normal(size=(30, 40))
    Y = from_discrete(y_values, y_values, grid, cubic8)
    X = [from_discrete(v, v, grid, cubic8) for v in x_values]
    return Y, X


class TestModelKind:
    def test_parse(self):
        assert ModelKind.parse(" BCRM ") is ModelKind.BCRM
        assert ModelKind.parse(ModelKind.CM) is ModelKind.CM

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            ModelKind.parse("pls")


class TestFit:
    def test_fit_arity(self, sim_data):
        expected = {
            ModelKind.FLM: {"lower", "upper"},
            ModelKind.CM: {"center"},
            ModelKind.CRM: {"center", "range"},
            ModelKind.BCRM: {"center", "range"},
            ModelKind.MCM: {"mcm"},
        }
        for kind in ALL_KINDS:
            result = fit(kind, sim_data.Y, sim_data.X, FAST)
            assert set(result.fits) == expected[kind]
        bcrm = fit(ModelKind.BCRM, sim_data.Y, sim_data.X)
        assert bcrm.fits["range"].B_hat.shape == (2 * 3 * 8, 8)
        assert len(bcrm.predictor_specs) == 3

    def test_degenerate_intervals_agree(self, degenerate):
        Y, X = degenerate
        predictions = {kind: predict_limits(fit(kind, Y, X, FAST), X) for kind in ALL_KINDS}
        reference_lower, reference_upper = predictions[ModelKind.CM]
        np.testing.assert_allclose(reference_lower, reference_upper, atol=1e-8)
        for kind in ALL_KINDS:
            np.testing.assert_allclose(predictions[kind][0], reference_lower, atol=1e-8)
            np.testing.assert_allclose(predictions[kind][1], reference_upper, atol=1e-8)

    def test_zero_ranges_give_zero_range_model(self, degenerate):
        Y, X = degenerate
        result = fit(ModelKind.CRM, Y, X)
        np.testing.assert_allclose(result.fits["range"].B_hat, 0.0, atol=1e-12)

    def test_mcm_is_reproducible(self, sim_data):
        options = ModelOptions(mcm_replicates=2, seed=42)
        first = fit(ModelKind.MCM, sim_data.Y, sim_data.X, options)
        second = fit(ModelKind.MCM, sim_data.Y, sim_data.X, options)
        np.testing.assert_array_equal(first.replicate_coefficients, second.replicate_coefficients)
        np.testing.assert_array_equal(first.fits["mcm"].B_hat, second.fits["mcm"].B_hat)
        other = fit(ModelKind.MCM, sim_data.Y, sim_data.X, ModelOptions(mcm_replicates=2, seed=43))
        assert not np.array_equal(first.replicate_coefficients, other.replicate_coefficients)

    def test_mcm_average_and_pool(self, sim_data):
        result = fit(ModelKind.MCM, sim_data.Y, sim_data.X, FAST)
        assert result.replicate_coefficients.shape == (4, 24, 8)
        np.testing.assert_allclose(result.fits["mcm"].B_hat, result.replicate_coefficients.mean(axis=0))
        assert len(result.residual_pool) == len(sim_data.Y)

    def test_mcm_on_generated_inversions(self):
        data = generate(SimConfig(n=100), SIM_CASES[1], seed=0)
        assert data.predictor_inversions > 0
        Y_train, X_train, _, X_test = _split(data, 50)
        lower, upper = predict_limits(fit(ModelKind.MCM, Y_train, X_train, FAST), X_test)
        assert np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))
        assert np.all(lower <= upper)

    def test_mcm_draws_between_swapped_limits(self, cubic8):
        rng = np.random.default_rng(3)
        grid = np.linspace(0.0, 1.0, 40)
        centers = rng.normal(size=(20, 40))
        lower, upper = centers - 1.0, centers + 1.0
        # Every other cell of the predictor has its limits swapped.
        x_lower = np.where(np.arange(40) % 2 == 0, upper, lower)
        x_upper = np.where(np.arange(40) % 2 == 0, lower, upper)
        Y = from_discrete(lower + 0.5 * centers, upper + 0.5 * centers, grid, cubic8)
        X = [from_discrete(x_lower, x_upper, grid, cubic8, strict=False)]
        result = fit(ModelKind.MCM, Y, X, FAST)
        assert np.all(np.isfinite(result.replicate_coefficients))
        lower_hat, upper_hat = predict_limits(result, X)
        assert np.all(lower_hat <= upper_hat)

    def test_mcm_independent_of_n_jobs(self, sim_data):
        serial = fit(ModelKind.MCM, sim_data.Y, sim_data.X, ModelOptions(mcm_replicates=4, seed=8, n_jobs=1))
        parallel = fit(ModelKind.MCM, sim_data.Y, sim_data.X, ModelOptions(mcm_replicates=4, seed=8, n_jobs=2))
        np.testing.assert_array_equal(serial.replicate_coefficients, parallel.replicate_coefficients)
        np.testing.assert_array_equal(serial.fits["mcm"].B_hat, parallel.fits["mcm"].B_hat)
        np.testing.assert_array_equal(serial.fits["mcm"].Sigma_hat, parallel.fits["mcm"].Sigma_hat)

    def test_replicate_seeds_depend_on_index_only(self):
        short = replicate_seeds(9, 2)
        long = replicate_seeds(9, 5)
        for a, b in zip(short, long):
            np.testing.assert_array_equal(a.generate_state(4), b.generate_state(4))

    def test_mcm_needs_two_replicates(self, sim_data):
        with pytest.raises(ConfigurationError):
            fit(ModelKind.MCM, sim_data.Y, sim_data.X, ModelOptions(mcm_replicates=1))

    def test_sample_count_mismatch(self, sim_data):
        with pytest.raises(ShapeMismatchError):
            fit(ModelKind.CM, sim_data.Y.subset(np.arange(10)), sim_data.X)

    def test_requires_predictors(self, sim_data):
        with pytest.raises(ShapeMismatchError):
            fit(ModelKind.CM, sim_data.Y, [])


class TestPredictLimits:
    def test_ordering_for_every_model(self, sim_data):
        Y_train, X_train, _, X_test = _split(sim_data, 20)
        for kind in ALL_KINDS:
            lower, upper = predict_limits(fit(kind, Y_train, X_train, FAST), X_test)
            assert lower.shape == (20, 50)
            assert np.all(lower <= upper)

    def test_zero_fits_give_training_means(self, sim_data):
        Y_train, X_train, _, X_test = _split(sim_data, 20)
        result = fit(ModelKind.CM, Y_train, X_train)
        center_fit = result.fits["center"]
        zeroed = replace(result, fits={"center": replace(center_fit, B_hat=np.zeros_like(center_fit.B_hat))})
        lower, upper = predict_limits(zeroed, X_test)
        phi = basis_matrix(result.response_spec, result.response_grid)
        mean_lower = phi @ result.response_means["lower"].coefficients
        mean_upper = phi @ result.response_means["upper"].coefficients
        np.testing.assert_allclose(lower, np.tile(np.minimum(mean_lower, mean_upper), (20, 1)), atol=1e-10)
        np.testing.assert_allclose(upper, np.tile(np.maximum(mean_lower, mean_upper), (20, 1)), atol=1e-10)

    def test_crm_recomposition_on_training_data(self, cubic8):
        # Noiseless: centers and half-ranges of the response are exact functions of the predictors.
        rng = np.random.default_rng(1)
        grid = np.linspace(0.0, 1.0, 40)
        phi = basis_matrix(cubic8, grid)
        xc = rng.normal(size=(30, 8)) @ phi.T
        xr = np.abs(rng.normal(size=(30, 8))) @ phi.T + 1.0
        X = [from_discrete(xc - xr, xc + xr, grid, cubic8)]
        result = fit(ModelKind.CRM, X[0], X)
        lower, upper = predict_limits(result, X)
        np.testing.assert_allclose(lower, xc - xr, atol=1e-6)
        np.testing.assert_allclose(upper, xc + xr, atol=1e-6)

    def test_crm_and_bcrm_centers_agree_with_independent_ranges(self, cubic8):
        # Half-ranges drawn independently of the centers; 100 training curves.
        rng = np.random.default_rng(12)
        grid = np.linspace(0.0, 1.0, 100)
        n = 200
        x_center = 10.0 + 3.0 * np.stack([gp_sample(grid, rng, size=n) for _ in range(3)])
        y_center = sum(x_center[m] @ riemann_integral_operator(grid, m + 1) for m in range(3))
        y_center = y_center + rng.normal(0.0, 0.2, size=y_center.shape)
        y_half = rng.uniform(1.0, 3.0, size=(n, 1))
        x_half = rng.uniform(1.0, 3.0, size=(3, n, 1))
        Y = from_discrete(y_center - y_half, y_center + y_half, grid, cubic8)
        X = [from_discrete(x_center[m] - x_half[m], x_center[m] + x_half[m], grid, cubic8) for m in range(3)]
        train, test = np.arange(100), np.arange(100, n)
        X_train, X_test = [x.subset(train) for x in X], [x.subset(test) for x in X]

        centers = {}
        for kind in (ModelKind.CRM, ModelKind.BCRM):
            lower, upper = predict_limits(fit(kind, Y.subset(train), X_train), X_test)
            centers[kind] = (lower + upper) / 2.0
        observed = y_center[test]
        spread = np.std(observed - observed.mean(axis=0))
        assert np.median(np.abs(centers[ModelKind.CRM] - centers[ModelKind.BCRM])) < 0.1 * spread

    def test_inversions_counted(self, sim_data):
        Y_train, X_train, _, X_test = _split(sim_data, 20)
        result = fit(ModelKind.CRM, Y_train, X_train)
        range_fit = result.fits["range"]
        spec = result.response_spec
        # A constant negative half-range puts every predicted lower limit above its upper limit.
        flipped = replace(
            result,
            fits={**result.fits, "range": replace(range_fit, B_hat=np.zeros_like(range_fit.B_hat))},
            response_means={**result.response_means, "range": FunctionalSample(-np.ones(spec.num_basis), spec)},
        )
        prediction = predict_limits_detailed(flipped, X_test)
        assert prediction.inverted == 20 * 50
        np.testing.assert_allclose(prediction.upper - prediction.lower, 2.0, atol=1e-10)

    def test_wrong_predictor_count(self, sim_data):
        result = fit(ModelKind.CM, sim_data.Y, sim_data.X)
        with pytest.raises(ShapeMismatchError):
            predict_limits(result, sim_data.X[:2])


class TestPredictionBand:
    @pytest.fixture
    def mcm(self, sim_data):
        Y_train, X_train, Y_test, X_test = _split(sim_data, 20)
        return fit(ModelKind.MCM, Y_train, X_train, FAST), Y_test, X_test

    def test_alpha_one_collapses(self, mcm):
        result, _, X_test = mcm
        band = mcm_prediction_band(result, X_test, alpha=1.0)
        np.testing.assert_allclose(band.lower_low, band.lower_high)
        np.testing.assert_allclose(band.upper_low, band.upper_high)

    def test_identical_replicates_and_zero_residuals(self, mcm):
        result, _, X_test = mcm
        B = result.fits["mcm"].B_hat
        pool = ResidualPool(lower=np.zeros((3, 50)), upper=np.zeros((3, 50)), grid=result.response_grid)
        flat = replace(result, replicate_coefficients=np.stack([B, B, B]), residual_pool=pool)
        band = mcm_prediction_band(flat, X_test)
        lower, upper = predict_limits(flat, X_test)
        np.testing.assert_allclose(band.lower_low, band.lower_high, atol=1e-10)
        np.testing.assert_allclose(np.minimum(band.lower_low, band.upper_low), lower, atol=1e-10)
        np.testing.assert_allclose(np.maximum(band.lower_high, band.upper_high), upper, atol=1e-10)

    def test_monotone_in_alpha(self, mcm):
        result, _, X_test = mcm
        wide = mcm_prediction_band(result, X_test, alpha=0.05, seed=1)
        narrow = mcm_prediction_band(result, X_test, alpha=0.5, seed=1)
        assert np.all(wide.lower_low <= narrow.lower_low)
        assert np.all(wide.lower_high >= narrow.lower_high)
        assert np.all(wide.upper_low <= narrow.upper_low)
        assert np.all(wide.upper_high >= narrow.upper_high)

    def test_reproducible_and_coverage_range(self, mcm):
        result, Y_test, X_test = mcm
        first = mcm_prediction_band(result, X_test, seed=7)
        second = mcm_prediction_band(result, X_test, seed=7)
        np.testing.assert_array_equal(first.upper_high, second.upper_high)
        cp_lower, cp_upper = first.coverage(Y_test.lower_values(), Y_test.upper_values())
        assert 0.0 <= cp_lower <= 1.0
        assert 0.0 <= cp_upper <= 1.0

    def test_invalid_alpha(self, mcm):
        result, _, X_test = mcm
        for alpha in (0.0, -0.1, 1.5):
            with pytest.raises(EstimationError):
                mcm_prediction_band(result, X_test, alpha=alpha)

    def test_empty_pool(self, mcm):
        result, _, X_test = mcm
        empty = ResidualPool(lower=np.zeros((0, 50)), upper=np.zeros((0, 50)), grid=result.response_grid)
        with pytest.raises(EstimationError):
            mcm_prediction_band(result, X_test, residual_pool=empty)

    def test_requires_mcm(self, sim_data):
        result = fit(ModelKind.CM, sim_data.Y, sim_data.X)
        with pytest.raises(ConfigurationError):
            mcm_prediction_band(result, sim_data.X)
