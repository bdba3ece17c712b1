import numpy as np
import pytest
import scipy.linalg

from pivotfield import CylindricalGrid, FieldModel, IrrigationSchedule, ParameterField
from pivotfield.ekf import FilterState, predict, run_assimilation, update
from pivotfield.observability import SensorLayout

from conftest import LOAM


class LinearModel:
    """dx/dt = A x with the exact discrete transition for stepping."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)

    def jacobian(self, t, x):
        return self.a

    def step(self, x, t, dt):
        return scipy.linalg.expm(self.a * dt) @ x


def textbook_kf(phi, q, c, r, x0, p0, measurements):
    """Plain covariance Kalman filter, written independently."""
    x, p = np.array(x0, dtype=float), np.array(p0, dtype=float)
    eye = np.eye(x.size)
    trajectory = [x.copy()]
    for y in measurements:
        x = phi @ x
        p = phi @ p @ phi.T + q
        p = 0.5 * (p + p.T)
        s = c @ p @ c.T + r
        gain = p @ c.T @ np.linalg.inv(s)
        x = x + gain @ (y - c @ x)
        p = (eye - gain @ c) @ p
        p = 0.5 * (p + p.T)
        trajectory.append(x.copy())
    return np.array(trajectory)


class TestUpdate:
    def test_scalar_hand_case(self):
        # P=1, C=1, R=1, innovation 1: gain 0.5, x += 0.5, P -> 0.5
        fs = FilterState(
            x=np.array([0.0]), P=np.eye(1), Q=np.zeros((1, 1)), R=np.eye(1)
        )
        out = update(fs, np.array([1.0]), SensorLayout((0,)))
        assert out.x[0] == pytest.approx(0.5)
        assert out.P[0, 0] == pytest.approx(0.5)

    def test_zero_innovation_leaves_state(self):
        rng = np.random.default_rng(41)
        x = rng.standard_normal(6)
        p = np.eye(6) * 2.0
        fs = FilterState(x=x, P=p, Q=np.zeros((6, 6)), R=np.eye(2) * 0.1)
        layout = SensorLayout((1, 4))
        out = update(fs, x[[1, 4]], layout)
        assert np.allclose(out.x, x)

    def test_huge_r_freezes_state(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal(5)
        fs = FilterState(
            x=x, P=np.eye(5), Q=np.zeros((5, 5)), R=np.eye(2) * 1e12
        )
        out = update(fs, np.array([3.0, -4.0]), SensorLayout((0, 3)))
        assert np.abs(out.x - x).max() < 1e-8

    def test_joseph_form_matches_standard(self):
        rng = np.random.default_rng(43)
        a = rng.standard_normal((5, 5))
        p = a @ a.T + np.eye(5)
        fs = FilterState(
            x=rng.standard_normal(5), P=p, Q=np.zeros((5, 5)), R=np.eye(2) * 0.3
        )
        layout = SensorLayout((2, 0))
        y = rng.standard_normal(2)
        standard = update(fs, y, layout, joseph=False)
        joseph = update(fs, y, layout, joseph=True)
        assert np.allclose(standard.x, joseph.x, atol=1e-12)
        assert np.allclose(standard.P, joseph.P, atol=1e-10)

    def test_measured_residual_shrinks_when_r_small(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            n = 6
            a = rng.standard_normal((n, n))
            p = a @ a.T + 0.5 * np.eye(n)
            nodes = tuple(rng.choice(n, size=2, replace=False).tolist())
            fs = FilterState(
                x=rng.standard_normal(n),
                P=p,
                Q=np.zeros((n, n)),
                R=np.eye(2) * 1e-8,
            )
            y = rng.standard_normal(2)
            before = np.abs(y - fs.x[list(nodes)])
            out = update(fs, y, SensorLayout(nodes))
            after = np.abs(y - out.x[list(nodes)])
            assert np.all(after <= before + 1e-12)

    def test_singular_innovation_names_sensors(self):
        fs = FilterState(
            x=np.zeros(3), P=np.zeros((3, 3)), Q=np.zeros((3, 3)), R=np.zeros((2, 2))
        )
        with pytest.raises(np.linalg.LinAlgError, match=r"\[0, 2\]"):
            update(fs, np.zeros(2), SensorLayout((0, 2)))

    def test_shape_mismatch_rejected(self):
        fs = FilterState(x=np.zeros(3), P=np.eye(3), Q=np.eye(3), R=np.eye(2))
        with pytest.raises(ValueError):
            update(fs, np.zeros(3), SensorLayout((0, 2)))


class TestPredict:
    def test_zero_dynamics_adds_q_per_step(self):
        class Still:
            def jacobian(self, t, x):
                return np.zeros((3, 3))

            def step(self, x, t, dt):
                return x

        q = np.diag([1e-4, 2e-4, 3e-4])
        fs = FilterState(x=np.ones(3), P=np.eye(3), Q=q, R=np.eye(1))
        out = predict(fs, Still(), 0.0, 5.0)
        assert np.allclose(out.x, fs.x)
        assert np.allclose(out.P, np.eye(3) + q)

    def test_linear_case_is_exact(self):
        rng = np.random.default_rng(45)
        a = rng.standard_normal((4, 4)) * 0.2
        model = LinearModel(a)
        p0 = np.eye(4) * 2.0
        fs = FilterState(x=rng.standard_normal(4), P=p0, Q=np.zeros((4, 4)), R=np.eye(1))
        dt = 0.7
        out = predict(fs, model, 0.0, dt)
        phi = scipy.linalg.expm(a * dt)
        assert np.allclose(out.P, phi @ p0 @ phi.T, atol=1e-12)
        assert np.allclose(out.x, phi @ fs.x, atol=1e-12)

    def test_euler_transition_option(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.0]])
        fs = FilterState(x=np.zeros(2), P=np.eye(2), Q=np.zeros((2, 2)), R=np.eye(1))
        out = predict(fs, LinearModel(a), 0.0, 0.1, transition="euler")
        phi = np.eye(2) + 0.1 * a
        assert np.allclose(out.P, phi @ phi.T)

    def test_two_state_textbook_prediction(self):
        # one hand-computed step: phi = [[1, dt], [0, 1]], P0 = I, Q = I
        class Integrator:
            def jacobian(self, t, x):
                return np.array([[0.0, 1.0], [0.0, 0.0]])

            def step(self, x, t, dt):
                return np.array([x[0] + dt * x[1], x[1]])

        dt = 0.5
        fs = FilterState(x=np.array([1.0, 2.0]), P=np.eye(2), Q=np.eye(2), R=np.eye(1))
        out = predict(fs, Integrator(), 0.0, dt)
        phi = np.array([[1.0, dt], [0.0, 1.0]])
        expected_p = phi @ phi.T + np.eye(2)
        assert np.allclose(out.x, [2.0, 2.0], atol=1e-10)
        assert np.allclose(out.P, expected_p, atol=1e-10)


class TestKalmanEquivalence:
    def test_ekf_matches_textbook_kf_on_linear_system(self):
        rng = np.random.default_rng(46)
        a = np.array([[-0.2, 1.0], [-1.0, -0.2]])
        dt = 0.3
        phi = scipy.linalg.expm(a * dt)
        q = np.diag([1e-4, 4e-4])
        r = np.array([[0.09]])
        c = np.array([[1.0, 0.0]])
        x0 = np.array([1.0, -1.0])
        p0 = np.eye(2) * 10.0
        ys = [np.array([v]) for v in rng.standard_normal(200)]

        oracle = textbook_kf(phi, q, c, r, x0, p0, ys)

        model = LinearModel(a)
        fs = FilterState(x=x0.copy(), P=p0.copy(), Q=q, R=r)
        layout = SensorLayout((0,))
        traj = [fs.x.copy()]
        for k, y in enumerate(ys):
            fs = predict(fs, model, k * dt, dt)
            fs = update(fs, y, layout)
            traj.append(fs.x.copy())
        assert np.abs(np.array(traj) - oracle).max() < 1e-10

    def test_run_assimilation_matches_textbook_kf(self):
        rng = np.random.default_rng(47)
        a = np.array([[-0.5, 0.4], [-0.4, -0.5]])
        dt = 0.25
        phi = scipy.linalg.expm(a * dt)
        q = np.eye(2) * 1e-5
        r = np.eye(1) * 0.04
        c = np.array([[0.0, 1.0]])
        x0 = np.array([0.5, 2.0])
        p0 = np.eye(2) * 4.0
        n_steps = 120
        ys = [np.array([v]) for v in rng.standard_normal(n_steps)]

        oracle = textbook_kf(phi, q, c, r, x0, p0, ys)

        series = [((k + 1) * dt, ys[k]) for k in range(n_steps)]
        fs = FilterState(x=x0.copy(), P=p0.copy(), Q=q, R=r)
        result = run_assimilation(
            LinearModel(a),
            fs,
            SensorLayout((1,)),
            series,
            t0=0.0,
            dt=dt,
            n_steps=n_steps,
            plausibility_band=(-np.inf, np.inf),
        )
        assert np.abs(result.estimates - oracle).max() < 1e-10
        assert result.updated_steps == n_steps


class TestRunAssimilation:
    def _field_setup(self):
        grid = CylindricalGrid(n_r=2, n_az=4, n_z=5, radius=20.0, depth=0.75)
        params = ParameterField.uniform(grid, LOAM)
        schedule = IrrigationSchedule.daily_blocks(
            rate=3.6e-3 / 86400.0, hours_on=8.0, n_days=2
        )
        model = FieldModel(grid=grid, params=params, schedule=schedule)
        return grid, model

    def test_empty_stream_is_open_loop(self):
        grid, model = self._field_setup()
        rng = np.random.default_rng(48)
        x0 = rng.uniform(-0.95, -0.8, grid.n_nodes)
        fs = FilterState.initial(x0, n_sensors=2, sigma0=1.0)
        result = run_assimilation(
            model, fs, SensorLayout((0, 5)), [], t0=0.0, dt=720.0, n_steps=20
        )
        # no measurements: exactly the model's own step chain
        x = x0.copy()
        for k in range(20):
            x = model.step(x, k * 720.0, 720.0)
            assert np.allclose(result.estimates[k + 1], x, atol=1e-12)
        assert result.updated_steps == 0

    def test_dense_noise_free_sensors_converge(self):
        grid, model = self._field_setup()
        rng = np.random.default_rng(49)
        x0 = rng.uniform(-0.95, -0.8, grid.n_nodes)
        truth = model.simulate(x0, horizon=30 * 720.0, dt_out=720.0)
        layout = SensorLayout(tuple(range(grid.n_nodes)))
        series = [(truth.times[k], truth.heads[k]) for k in range(1, 31)]
        fs = FilterState.initial(
            1.2 * x0, n_sensors=grid.n_nodes, sigma0=10.0, measurement_std=1e-6
        )
        result = run_assimilation(
            model, fs, layout, series, t0=0.0, dt=720.0, n_steps=30
        )
        err0 = np.abs(result.estimates[0] - truth.heads[0]).max()
        err_end = np.abs(result.estimates[-1] - truth.heads[-1]).max()
        assert err_end < 1e-3 * err0

    def test_measurement_before_start_rejected(self):
        grid, model = self._field_setup()
        fs = FilterState.initial(np.full(grid.n_nodes, -0.9), n_sensors=1)
        with pytest.raises(ValueError, match="precede"):
            run_assimilation(
                model,
                fs,
                SensorLayout((0,)),
                [(-3600.0, np.array([-0.5]))],
                t0=0.0,
                dt=720.0,
                n_steps=5,
            )

    def test_unsorted_measurements_rejected(self):
        grid, model = self._field_setup()
        fs = FilterState.initial(np.full(grid.n_nodes, -0.9), n_sensors=1)
        series = [(1440.0, np.array([-0.5])), (720.0, np.array([-0.5]))]
        with pytest.raises(ValueError, match="sorted"):
            run_assimilation(
                model, fs, SensorLayout((0,)), series, t0=0.0, dt=720.0, n_steps=5
            )

    def test_implausible_measurements_rejected_and_counted(self):
        grid, model = self._field_setup()
        x0 = np.full(grid.n_nodes, -0.9)
        fs = FilterState.initial(x0, n_sensors=2, sigma0=1.0)
        series = [
            (720.0, np.array([5.0, -0.85])),  # first sensor is implausible
            (1440.0, np.array([-200.0, np.nan])),  # one implausible, one gap
        ]
        result = run_assimilation(
            model, fs, SensorLayout((3, 11)), series, t0=0.0, dt=720.0, n_steps=3
        )
        assert result.rejected_measurements == 2
        # step 1 keeps its plausible component; step 2 has none left
        assert result.updated_steps == 1

    def test_gap_steps_are_prediction_only(self):
        grid, model = self._field_setup()
        rng = np.random.default_rng(50)
        x0 = rng.uniform(-0.95, -0.8, grid.n_nodes)
        truth = model.simulate(x0, horizon=10 * 720.0, dt_out=720.0)
        layout = SensorLayout((7,))
        series = [(5 * 720.0, truth.heads[5, [7]])]  # single update at step 5
        fs = FilterState.initial(1.2 * x0, n_sensors=1, sigma0=1.0)
        result = run_assimilation(
            model, fs, layout, series, t0=0.0, dt=720.0, n_steps=10
        )
        # identical to the model's own step chain until the measurement lands
        x = 1.2 * x0
        for k in range(4):
            x = model.step(x, k * 720.0, 720.0)
            assert np.allclose(result.estimates[k + 1], x, atol=1e-12)
        assert result.updated_steps == 1


class TestCovarianceHealth:
    def test_p_stays_symmetric_psd_over_many_cycles(self):
        grid = CylindricalGrid(n_r=2, n_az=4, n_z=4, radius=20.0, depth=0.75)
        params = ParameterField.uniform(grid, LOAM)
        model = FieldModel(grid=grid, params=params)
        rng = np.random.default_rng(51)
        x0 = rng.uniform(-0.95, -0.8, grid.n_nodes)
        layout = SensorLayout((5, 17, 30))
        fs = FilterState.initial(x0, n_sensors=3, sigma0=1.0)
        worst = 0.0
        for k in range(1000):
            fs = predict(fs, model, k * 720.0, 720.0, transition="euler")
            y = fs.x[list(layout.nodes)] + rng.normal(0, 6e-2, 3)
            fs = update(fs, y, layout)
            assert np.array_equal(fs.P, fs.P.T)
            min_eig = np.linalg.eigvalsh(fs.P).min()
            scale = np.trace(fs.P) / fs.P.shape[0]
            worst = min(worst, min_eig / scale)
        assert worst >= -1e-8
