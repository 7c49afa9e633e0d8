import numpy as np
import pytest
from scipy import special

from qlstm import data
from qlstm.data import PendulumConfig, PopInvConfig, TimeSeries


class TestSine:
    def test_quarter_periods(self):
        # 5 points over [0, 2*pi] land on the zeros and extrema.
        ts = data.gen_sine(5, 0.0, 2 * np.pi)
        np.testing.assert_allclose(ts.values, [0, 1, 0, -1, 0], atol=1e-12)

    def test_default_length(self):
        assert len(data.gen_sine()) == 200

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            data.gen_sine(1)


class TestPendulum:
    def test_initial_velocity(self):
        assert data.gen_pendulum().values[0] == 3.0

    def test_default_length(self):
        # 10 s at dt = 0.05 -> 200 steps plus the initial sample.
        assert len(data.gen_pendulum()) == 201

    def test_undamped_energy_conserved(self):
        cfg = PendulumConfig(b=0.0, dt=0.005)
        traj = data.pendulum_trajectory(cfg)
        energy = 0.5 * cfg.m * (cfg.L * traj[:, 1]) ** 2 + cfg.m * cfg.g * cfg.L * (
            1 - np.cos(traj[:, 0])
        )
        assert np.abs(energy - energy[0]).max() <= 1e-8

    def test_richardson_step_halving(self):
        # 4th-order integrator: halving dt from 0.01 must agree to 1e-6.
        coarse = data.pendulum_trajectory(PendulumConfig(dt=0.01))
        fine = data.pendulum_trajectory(PendulumConfig(dt=0.005))
        assert np.abs(coarse[:, 1] - fine[::2, 1]).max() <= 1e-6

    def test_damped_energy_nonincreasing(self):
        cfg = PendulumConfig(dt=0.005)
        traj = data.pendulum_trajectory(cfg)
        energy = 0.5 * cfg.m * (cfg.L * traj[:, 1]) ** 2 + cfg.m * cfg.g * cfg.L * (
            1 - np.cos(traj[:, 0])
        )
        assert np.all(np.diff(energy) <= 1e-12)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            PendulumConfig(dt=0.0)
        with pytest.raises(ValueError):
            PendulumConfig(t_end=0.01, dt=0.05)


class TestBessel:
    def test_at_zero(self):
        assert data.bessel_j(0, 0.0) == 1.0
        assert data.bessel_j(2, 0.0) == 0.0

    def test_j2_at_one(self):
        assert data.bessel_j(2, 1.0) == pytest.approx(0.11490348493190048, abs=1e-14)

    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            order = int(rng.integers(0, 11))
            x = float(rng.uniform(0, 20))
            # Alternating-series cancellation caps the accuracy near x = 20.
            assert data.bessel_j(order, x) == pytest.approx(
                special.jv(order, x), abs=2e-9
            )
        assert data.bessel_j(3, 2.5) == pytest.approx(special.jv(3, 2.5), abs=1e-14)

    def test_three_term_recurrence(self):
        # J_{n-1}(x) + J_{n+1}(x) = (2n/x) J_n(x)
        for x in (0.5, 3.0, 11.7):
            for n in (1, 2, 5):
                lhs = data.bessel_j(n - 1, x) + data.bessel_j(n + 1, x)
                assert lhs == pytest.approx(2 * n / x * data.bessel_j(n, x), abs=1e-10)

    def test_series_shape(self):
        ts = data.gen_bessel()
        assert len(ts) == 300 and ts.values[0] == 0.0

    def test_bad_order(self):
        with pytest.raises(ValueError):
            data.bessel_j(-1, 1.0)
        with pytest.raises(ValueError):
            data.bessel_j(11, 1.0)


class TestPopulationInversion:
    def test_starts_at_one(self):
        ts = data.gen_population_inversion()
        assert ts.values[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_coupling_is_constant_one(self):
        ts = data.gen_population_inversion(PopInvConfig(coupling=0.0))
        np.testing.assert_allclose(ts.values, 1.0, atol=1e-12)

    def test_frozen_point(self):
        ts = data.gen_population_inversion(PopInvConfig(t_end=0.1, n_points=2))
        assert ts.values[1] == pytest.approx(0.2883678471960242, abs=1e-10)

    def test_collapse(self):
        # The Rabi envelope collapses well before the first revival at 2*pi*sqrt(n_bar).
        ts = data.gen_population_inversion()
        t = np.linspace(0, 5, 500)
        assert np.abs(ts.values[t > 4.0]).max() < 1e-3

    def test_cutoff_validation(self):
        with pytest.raises(ValueError):
            PopInvConfig(n_bar=40.0, n_max=60)


class TestCsv:
    def test_round_trip(self, tmp_path):
        ts = data.gen_sine(10)
        path = tmp_path / "series.csv"
        data.write_csv(ts, path)
        loaded = data.load_csv(path)
        np.testing.assert_array_equal(loaded.values, ts.values)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1.0\n1,2.0\n")
        with pytest.raises(ValueError, match="header"):
            data.load_csv(path)

    def test_bad_value_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,value\n0,1.0\n1,oops\n")
        with pytest.raises(ValueError, match=":3:"):
            data.load_csv(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,value\n0,1.0,extra\n")
        with pytest.raises(ValueError, match="2 columns"):
            data.load_csv(path)

    def test_too_short(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("t,value\n" + "".join(f"{i},{i}.0\n" for i in range(5)))
        with pytest.raises(ValueError, match="too short"):
            data.load_csv(path)


class TestRescale:
    def test_example(self):
        scaled, scaler = data.rescale_minmax(TimeSeries([0.0, 5.0, 10.0]))
        np.testing.assert_array_equal(scaled.values, [-1.0, 0.0, 1.0])
        assert scaler == (0.0, 10.0)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        values = rng.normal(size=40) * 7 + 3
        scaled, scaler = data.rescale_minmax(TimeSeries(values))
        assert scaled.values.min() == -1.0 and scaled.values.max() == 1.0
        np.testing.assert_allclose(data.unscale(scaled.values, scaler), values, atol=1e-12)

    def test_constant_series_rejected(self):
        with pytest.raises(ValueError):
            data.rescale_minmax(TimeSeries(np.ones(10)))


class TestWindows:
    def test_length_six(self):
        ds = data.make_windows(TimeSeries([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), n=4)
        assert ds.n_samples == 2
        np.testing.assert_array_equal(ds.inputs, [[1, 2, 3, 4], [2, 3, 4, 5]])
        np.testing.assert_array_equal(ds.targets, [5, 6])

    def test_split_100(self):
        ds = data.make_windows(TimeSeries(np.arange(104.0)), n=4)
        assert ds.n_samples == 100
        (xtr, ytr), (xte, yte) = data.split(ds)
        assert len(ytr) == 67 and len(yte) == 33
        np.testing.assert_array_equal(np.concatenate([ytr, yte]), ds.targets)

    def test_window_overlap_invariant(self):
        ds = data.make_windows(TimeSeries(np.sin(np.arange(30.0))), n=4)
        # Consecutive windows shift by one: w[k][1:] == w[k+1][:-1].
        np.testing.assert_array_equal(ds.inputs[:-1, 1:], ds.inputs[1:, :-1])
        np.testing.assert_array_equal(ds.inputs[1:, -1], ds.targets[:-1])

    def test_too_short(self):
        with pytest.raises(ValueError):
            data.make_windows(TimeSeries([1.0, 2.0, 3.0, 4.0]), n=4)
