import numpy as np
import pytest

from pivotfield import CylindricalGrid, SoilParameters
from pivotfield.kriging import (
    SoilSample,
    VariogramModel,
    fit_variogram,
    fit_variogram_values,
    krige_field,
    krige_points,
    kriging_weights,
)

from conftest import LOAM


def make_sample(x, y, depth, **overrides):
    kw = dict(theta_s=0.43, theta_r=0.078, K_s=2.9e-6, alpha=3.6, n=1.56)
    kw.update(overrides)
    return SoilSample(x=x, y=y, depth=depth, parameters=SoilParameters(**kw))


def scattered_samples(rng, n=12, radius=40.0, depth=0.7):
    out = []
    for _ in range(n):
        r = radius * np.sqrt(rng.uniform(0.05, 1.0))
        th = rng.uniform(0, 2 * np.pi)
        out.append(
            make_sample(
                r * np.cos(th),
                r * np.sin(th),
                rng.uniform(0.05, depth),
                theta_s=rng.uniform(0.38, 0.48),
                alpha=rng.uniform(2.0, 5.0),
            )
        )
    return out


class _LinearGamma:
    """gamma(d) = d, the textbook conditionally-negative-definite model."""

    def gamma(self, d):
        return np.asarray(d, dtype=float)


class TestOrdinaryKrigingSystem:
    def test_hand_solved_midpoint_oracle(self):
        # Oracle: exact rational solve of the 4x4 system
        #   [[0,1,2,1],[1,0,1,1],[2,1,0,1],[1,1,1,0]] w = [1/2,1/2,3/2,1]
        # for samples at x=0,1,2 (values 1,2,3), gamma(d)=d, query x=0.5,
        # giving weights (1/2, 1/2, 0), Lagrange multiplier 0, prediction 3/2.
        coords = np.array([[0.0, 0, 0], [1.0, 0, 0], [2.0, 0, 0]])
        query = np.array([[0.5, 0, 0]])
        weights, lagrange = kriging_weights(_LinearGamma(), coords, query)
        assert weights[0] == pytest.approx([0.5, 0.5, 0.0], abs=1e-12)
        assert lagrange[0] == pytest.approx(0.0, abs=1e-12)
        assert weights[0] @ np.array([1.0, 2.0, 3.0]) == pytest.approx(1.5, abs=1e-12)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(3)
        coords = rng.uniform(-30, 30, size=(15, 3))
        coords[:, 2] = rng.uniform(0, 10, 15)
        queries = rng.uniform(-30, 30, size=(40, 3))
        model = VariogramModel("exponential", 0.0, 1.0, 25.0)
        weights, _ = kriging_weights(model, coords, queries)
        assert np.allclose(weights.sum(axis=1), 1.0, atol=1e-10)

    def test_exactness_at_sample_points(self):
        rng = np.random.default_rng(4)
        samples = scattered_samples(rng)
        points = np.array([(s.x, s.y, s.depth) for s in samples])
        pred = krige_points(samples, "theta_s", points)
        truth = np.array([s.parameters.theta_s for s in samples])
        assert np.allclose(pred, truth, atol=1e-8)

    def test_singular_system_falls_back_to_nearest_neighbor(self):
        class ZeroGamma:
            def gamma(self, d):
                return np.zeros_like(np.asarray(d, dtype=float))

        samples = [
            make_sample(0.0, 0.0, 0.1, theta_s=0.40),
            make_sample(10.0, 0.0, 0.1, theta_s=0.45),
        ]
        with pytest.warns(RuntimeWarning, match="singular"):
            pred = krige_points(
                samples,
                "theta_s",
                np.array([[0.5, 0.0, 0.1], [9.5, 0.0, 0.1]]),
                model=ZeroGamma(),
            )
        assert pred == pytest.approx([0.40, 0.45])


class TestVariogramFit:
    def test_five_sample_minimum(self):
        rng = np.random.default_rng(5)
        samples = scattered_samples(rng, n=4)
        with pytest.raises(ValueError, match="at least 5"):
            fit_variogram(samples, "theta_s")

    def test_collocated_samples_rejected(self):
        samples = [make_sample(1.0, 2.0, 0.3, theta_s=0.4 + 0.01 * i) for i in range(6)]
        with pytest.raises(ValueError, match="collocated"):
            fit_variogram(samples, "theta_s")

    def test_constant_values_yield_flat_model(self):
        rng = np.random.default_rng(6)
        samples = scattered_samples(rng, n=8)
        samples = [
            SoilSample(s.x, s.y, s.depth, parameters=LOAM) for s in samples
        ]
        model = fit_variogram(samples, "theta_s")
        assert model.sill - model.nugget <= 1e-12
        grid = CylindricalGrid(n_r=2, n_az=4, n_z=3, radius=45.0, depth=0.75)
        field = krige_field(samples, grid)
        assert np.allclose(field.theta_s, LOAM.theta_s, atol=1e-10)

    def test_recovers_known_exponential_range(self):
        # synthetic-generator oracle: draw gaussian fields with covariance
        # sill * exp(-3 d / range), fit, and demand the mean fitted range
        # lands within 50% of the truth
        true_range = 20.0
        fitted = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            coords = np.column_stack(
                [rng.uniform(0, 60, 10), rng.uniform(0, 60, 10), np.zeros(10)]
            )
            d = np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))
            cov = np.exp(-3.0 * d / true_range)
            chol = np.linalg.cholesky(cov + 1e-10 * np.eye(10))
            values = chol @ rng.standard_normal(10)
            model = fit_variogram_values(coords, values, kind="exponential")
            fitted.append(model.range_)
        assert abs(np.mean(fitted) - true_range) <= 0.5 * true_range


class TestKrigeField:
    def test_constant_samples_give_constant_field(self):
        rng = np.random.default_rng(7)
        samples = [
            SoilSample(s.x, s.y, s.depth, parameters=LOAM)
            for s in scattered_samples(rng, n=10)
        ]
        grid = CylindricalGrid(n_r=3, n_az=4, n_z=4, radius=45.0, depth=0.75)
        field = krige_field(samples, grid)
        for name in ("theta_s", "theta_r", "K_s", "alpha", "n"):
            assert np.allclose(getattr(field, name), getattr(LOAM, name), atol=1e-10)

    def test_heterogeneous_samples_give_heterogeneous_field(self):
        rng = np.random.default_rng(8)
        samples = scattered_samples(rng, n=14)
        grid = CylindricalGrid(n_r=3, n_az=6, n_z=4, radius=45.0, depth=0.75)
        field = krige_field(samples, grid)
        assert field.theta_s.var() > 0.0

    def test_output_respects_parameter_invariants(self):
        rng = np.random.default_rng(9)
        samples = scattered_samples(rng, n=14)
        grid = CylindricalGrid(n_r=3, n_az=6, n_z=4, radius=45.0, depth=0.75)
        field = krige_field(samples, grid)
        assert np.all(field.n >= 1.0 + 1e-3)
        assert np.all(field.theta_r < field.theta_s)
        assert np.all(field.K_s > 0)

    def test_duplicate_positions_rejected(self):
        samples = [make_sample(0.0, 1.0, 0.2), make_sample(0.0, 1.0, 0.2)]
        grid = CylindricalGrid(n_r=2, n_az=4, n_z=3, radius=45.0, depth=0.75)
        with pytest.raises(ValueError, match="distinct"):
            krige_field(samples, grid)

    def test_sample_outside_cylinder_rejected(self):
        samples = [make_sample(100.0, 0.0, 0.2), make_sample(0.0, 1.0, 0.2)]
        grid = CylindricalGrid(n_r=2, n_az=4, n_z=3, radius=45.0, depth=0.75)
        with pytest.raises(ValueError, match="outside"):
            krige_field(samples, grid)


class TestVariogramModel:
    def test_invalid_models_rejected(self):
        with pytest.raises(ValueError):
            VariogramModel("exponential", -0.1, 1.0, 10.0)
        with pytest.raises(ValueError):
            VariogramModel("exponential", 0.5, 0.5, 10.0)
        with pytest.raises(ValueError):
            VariogramModel("exponential", 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            VariogramModel("cubic", 0.0, 1.0, 10.0)

    def test_zero_at_origin_and_increasing(self):
        for kind in ("exponential", "spherical", "gaussian"):
            model = VariogramModel(kind, 0.05, 1.0, 15.0)
            assert model.gamma(0.0) == 0.0
            d = np.linspace(0.01, 60.0, 50)
            g = model.gamma(d)
            assert np.all(np.diff(g) >= -1e-12)
            assert np.all(g <= model.sill + 1e-12)
