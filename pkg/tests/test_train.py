import numpy as np
import pytest

from qlstm import data, models, train
from qlstm.train import CheckpointError, RmspropState, TrainConfig


def sine_dataset(n_points=40):
    scaled, _ = data.rescale_minmax(data.gen_sine(n_points))
    return data.make_windows(scaled)


class TestMse:
    def test_zero(self):
        assert train.mse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_example(self):
        assert train.mse([1.0, 3.0], [0.0, 1.0]) == pytest.approx(2.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            train.mse([], [])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            train.mse([1.0], [1.0, 2.0])


class TestRmsprop:
    CFG = TrainConfig()

    def test_first_step_normalizes_to_learning_rate(self):
        # E[g^2] starts at g_0^2, so the first update is lr * g / (|g| + eps).
        p, state = train.rmsprop_step(
            np.zeros(1), np.ones(1), RmspropState.fresh(1), self.CFG
        )
        assert p[0] == pytest.approx(-0.01 / (1 + 1e-8), abs=1e-18)
        assert state.avg_sq[0] == 1.0 and state.step == 1

    def test_second_step(self):
        p, state = train.rmsprop_step(
            np.zeros(1), np.ones(1), RmspropState.fresh(1), self.CFG
        )
        p2, state2 = train.rmsprop_step(p, np.full(1, 2.0), state, self.CFG)
        # E = 0.99 * 1 + 0.01 * 4 = 1.03; delta = -0.02 / (sqrt(1.03) + eps).
        assert state2.avg_sq[0] == pytest.approx(1.03, abs=1e-15)
        assert p2[0] - p[0] == pytest.approx(-0.01970658536911111, abs=1e-15)

    def test_constant_gradient_step_bounded_by_lr(self):
        cfg = self.CFG
        p = np.zeros(3)
        state = RmspropState.fresh(3)
        g = np.array([0.5, -2.0, 10.0])
        for _ in range(20):
            new_p, state = train.rmsprop_step(p, g, state, cfg)
            assert np.all(np.abs(new_p - p) <= cfg.learning_rate + 1e-12)
            p = new_p

    def test_zero_gradient_is_fixed_point(self):
        p, _ = train.rmsprop_step(
            np.array([1.0, -2.0]), np.zeros(2), RmspropState.fresh(2), self.CFG
        )
        np.testing.assert_array_equal(p, [1.0, -2.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            train.rmsprop_step(np.zeros(2), np.zeros(3), RmspropState.fresh(2), self.CFG)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(smoothing=1.0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(gradient_engine="exact")


class TestTrainLoop:
    def test_zero_epochs_leaves_model_unchanged(self):
        model = models.init_lstm(0)
        final, log = train.train(model, sine_dataset(), TrainConfig(max_epochs=0))
        np.testing.assert_array_equal(final.to_vector(), model.to_vector())
        assert log.records == []

    def test_lstm_fits_a_line(self):
        # y_t = x_t on a straight ramp is learnable to high accuracy quickly.
        series = data.TimeSeries(np.linspace(-1, 1, 40))
        dataset = data.make_windows(series)
        model = models.init_lstm(1)
        final, log = train.train(model, dataset, TrainConfig(max_epochs=60, seed=1))
        assert log.records[-1].train_loss < 1e-3
        assert log.train_losses()[-1] < log.train_losses()[0]

    def test_same_seed_is_bit_identical(self):
        dataset = sine_dataset()
        cfg = TrainConfig(max_epochs=2, seed=5)
        runs = []
        for _ in range(2):
            final, log = train.train(models.init_lstm(5), dataset, cfg)
            runs.append((final.to_vector(), log.train_losses(), log.test_losses()))
        np.testing.assert_array_equal(runs[0][0], runs[1][0])
        np.testing.assert_array_equal(runs[0][1], runs[1][1])
        np.testing.assert_array_equal(runs[0][2], runs[1][2])

    def test_qlstm_short_run_decreases_loss(self):
        dataset = sine_dataset(60)
        model = models.init_qlstm(1)
        _, log = train.train(model, dataset, TrainConfig(max_epochs=4, seed=1))
        losses = log.train_losses()
        assert losses[-1] < losses[0]

    def test_epoch_callback_sees_every_epoch(self):
        seen = []
        train.train(
            models.init_lstm(0),
            sine_dataset(),
            TrainConfig(max_epochs=3),
            epoch_callback=lambda e, m, s: seen.append((e, s.step)),
        )
        assert [e for e, _ in seen] == [1, 2, 3]
        assert seen[-1][1] > seen[0][1]  # optimizer steps accumulate

    def test_empty_split_rejected(self):
        series = data.TimeSeries(np.linspace(0, 1, 6))
        dataset = data.make_windows(series)  # 2 samples -> split floor(1.34)=1
        dataset.split_index = 2  # force empty test split
        with pytest.raises(ValueError):
            train.train(models.init_lstm(0), dataset, TrainConfig(max_epochs=1))


class TestMetricsFile:
    def test_format_and_determinism(self, tmp_path):
        log = train.MetricsLog(
            records=[
                train.EpochRecord(1, 0.5, 0.6, 12.3),
                train.EpochRecord(2, 0.25, 0.3, 11.7),
            ]
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        train.write_metrics(log, p1)
        train.write_metrics(log, p2)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().splitlines()
        assert lines[0] == "epoch,train_loss,test_loss,wall_ms"
        assert lines[1] == "1,0.5,0.6,0"
        assert len(lines) == 3

    def test_include_wall(self, tmp_path):
        log = train.MetricsLog(records=[train.EpochRecord(1, 0.5, 0.6, 12.3)])
        path = tmp_path / "m.csv"
        train.write_metrics(log, path, include_wall=True)
        assert path.read_text().splitlines()[1] == "1,0.5,0.6,12"

    def test_losses_round_trip_exactly(self, tmp_path):
        value = 1 / 3
        log = train.MetricsLog(records=[train.EpochRecord(1, value, value, 0.0)])
        path = tmp_path / "m.csv"
        train.write_metrics(log, path)
        field = path.read_text().splitlines()[1].split(",")[1]
        assert float(field) == value


class TestCheckpoints:
    def test_qlstm_round_trip_exact(self, tmp_path):
        model = models.init_qlstm(3)
        state = RmspropState(avg_sq=np.random.default_rng(0).uniform(size=146), step=7)
        path = tmp_path / "ck.json"
        train.save_checkpoint(model, state, path, scaler=(-0.5, 2.0), meta={"epoch": 7})
        loaded, lstate, scaler, meta = train.load_checkpoint(path, expect_kind="qlstm")
        np.testing.assert_array_equal(loaded.to_vector(), model.to_vector())
        np.testing.assert_array_equal(lstate.avg_sq, state.avg_sq)
        assert lstate.step == 7 and scaler == (-0.5, 2.0) and meta == {"epoch": 7}

    def test_lstm_round_trip_exact(self, tmp_path):
        model = models.init_lstm(3)
        path = tmp_path / "ck.json"
        train.save_checkpoint(model, None, path)
        loaded, state, scaler, meta = train.load_checkpoint(path)
        np.testing.assert_array_equal(loaded.to_vector(), model.to_vector())
        assert state is None and scaler is None and meta == {}

    def test_resume_is_equivalent_to_uninterrupted(self, tmp_path):
        dataset = sine_dataset()
        model = models.init_lstm(2)
        full, _ = train.train(model, dataset, TrainConfig(max_epochs=4, seed=9))

        half_state = {}
        half, _ = train.train(
            model,
            dataset,
            TrainConfig(max_epochs=2, seed=9),
            epoch_callback=lambda e, m, s: half_state.update(state=s),
        )
        # Epoch numbering restarts on resume, so replay epochs 3-4 by hand.
        vec = half.to_vector()
        state = half_state["state"]
        cfg = TrainConfig(max_epochs=4, seed=9)
        import qlstm.autodiff as ad
        from qlstm.models import collect_grads, window_node, wrap_params

        (train_x, train_y), _ = dataset.train(), dataset.test()
        for epoch in (3, 4):
            rng = np.random.default_rng([cfg.seed, epoch])
            order = rng.permutation(train_y.size)
            for start in range(0, order.size, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                current = type(model).from_vector(vec)
                nodes = wrap_params(current)
                loss = ad.mean_squared_error(
                    window_node(nodes, train_x[idx]), train_y[idx][:, None]
                )
                ad.backward(loss)
                vec, state = train.rmsprop_step(vec, collect_grads(nodes), state, cfg)
        np.testing.assert_array_equal(vec, full.to_vector())

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(CheckpointError):
            train.load_checkpoint(path)

    def test_wrong_schema(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"schema": 99}')
        with pytest.raises(CheckpointError):
            train.load_checkpoint(path)

    def test_cross_model_rejected(self, tmp_path):
        path = tmp_path / "ck.json"
        train.save_checkpoint(models.init_lstm(0), None, path)
        with pytest.raises(CheckpointError, match="expected 'qlstm'"):
            train.load_checkpoint(path, expect_kind="qlstm")

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"schema": 1, "model": {"kind": "qlstm"}}')
        with pytest.raises(CheckpointError):
            train.load_checkpoint(path)
