import math

import numpy as np
import pytest
from dataclasses import replace

from ternspike.errors import ConfigError, TrainingDiverged
from ternspike.qtsnn import qt_forward
from ternspike.training import (
    QTNet,
    TrainConfig,
    attach_bias_channel,
    build_toy_dataset,
    export_agreement,
    export_for_inference,
    grad_check,
    history_to_csv,
    stratified_split,
    ste_quantize,
    surrogate_fire,
    train_toy,
)

FAST = replace(TrainConfig(), epochs=3, corpus_n=120)


class TestSurrogateFire:
    def test_dead_zone(self):
        spike, grad = surrogate_fire(0.0, 1.0, 0.5)
        assert (spike, grad) == (0.0, 0.0)

    def test_upper_window(self):
        spike, grad = surrogate_fire(1.2, 1.0, 0.5)
        assert (spike, grad) == (1.0, 1.0)

    def test_lower_window_subthreshold(self):
        spike, grad = surrogate_fire(-0.9, 1.0, 0.5)
        assert (spike, grad) == (0.0, 1.0)

    def test_negative_spike(self):
        spike, _ = surrogate_fire(-1.4, 1.0, 0.5)
        assert spike == -1.0

    def test_gamma_guard(self):
        with pytest.raises(ConfigError):
            surrogate_fire(0.0, 1.0, 0.0)


class TestSteQuantize:
    def test_interior_point(self):
        level, dx, dalpha = ste_quantize(0.4, 1.0, 3)
        assert level == pytest.approx(1 / 3)
        assert (dx, dalpha) == (1.0, 0.0)

    def test_saturated_positive(self):
        level, dx, dalpha = ste_quantize(5.0, 1.0, 3)
        assert (level, dx, dalpha) == (1.0, 0.0, 1.0)

    def test_saturated_negative(self):
        level, dx, dalpha = ste_quantize(-5.0, 1.0, 3)
        assert (level, dx, dalpha) == (-1.0, 0.0, -1.0)


class TestGradCheck:
    @pytest.fixture(scope="class")
    def setup(self):
        cfg = FAST
        xs, ys = build_toy_dataset(cfg)
        rng = np.random.default_rng(17)
        model = QTNet((cfg.fan_in + 1, *cfg.hidden, 3), cfg, rng)
        return model, xs, ys

    def test_analytic_matches_finite_differences(self, setup):
        model, xs, ys = setup
        err = grad_check(model, (xs[0], ys[0]), n_params=20, seed=0)
        assert err < 1e-4

    def test_larger_step_degrades(self, setup):
        model, xs, ys = setup
        fine = grad_check(model, (xs[1], ys[1]), n_params=20, seed=1, step=1e-4)
        coarse = grad_check(model, (xs[1], ys[1]), n_params=20, seed=1, step=1e-2)
        assert coarse > fine

    def test_single_layer_model(self, setup):
        _, xs, ys = setup
        cfg = replace(FAST, hidden=())
        model = QTNet((cfg.fan_in + 1, 3), cfg, np.random.default_rng(3))
        assert grad_check(model, (xs[2], ys[2]), n_params=20, seed=2) < 1e-4


class TestDataset:
    def test_shapes_and_symbols(self):
        xs, ys = build_toy_dataset(FAST)
        assert xs.shape == (120, FAST.timesteps, FAST.fan_in + 1)
        assert set(np.unique(xs)) <= {-1, 0, 1}
        assert np.all(xs[:, :, -1] == 1)  # bias lane

    def test_stratified_split(self):
        _, ys = build_toy_dataset(FAST)
        rng = np.random.default_rng(0)
        tr, te = stratified_split(ys, 0.2, rng)
        assert len(tr) + len(te) == len(ys)
        assert len(set(tr) & set(te)) == 0
        counts = np.bincount(ys[te])
        assert np.all(counts == counts[0])

    def test_attach_bias_channel(self):
        chunks = np.zeros((4, 5), dtype=np.int8)
        out = attach_bias_channel(chunks)
        assert out.shape == (4, 6)
        assert np.all(out[:, -1] == 1)


class TestTrainToy:
    def test_fast_run_learns_above_chance(self):
        model, hist = train_toy(FAST)
        assert hist[-1].train_acc > 0.5
        assert len(hist) == FAST.epochs + 1

    def test_seed_determinism(self):
        _, h1 = train_toy(FAST)
        _, h2 = train_toy(FAST)
        assert history_to_csv(h1) == history_to_csv(h2)

    def test_zero_epochs_is_chance(self):
        _, hist = train_toy(replace(FAST, epochs=0))
        assert len(hist) == 1
        assert abs(hist[0].test_acc - 1 / 3) <= 0.1

    def test_divergence_aborts(self, monkeypatch):
        import ternspike.training as tr

        def poisoned(scores, y):
            return float("nan"), np.zeros_like(scores)

        monkeypatch.setattr(tr, "_loss_and_dscores", poisoned)
        with pytest.raises(TrainingDiverged):
            train_toy(FAST)

    def test_csv_header(self):
        _, hist = train_toy(replace(FAST, epochs=1))
        text = history_to_csv(hist)
        assert text.splitlines()[0] == "epoch,train_loss,train_acc,test_acc"


class TestExport:
    def test_threshold_ceiling_and_k_rounding(self):
        cfg = FAST
        model = QTNet((cfg.fan_in + 1, 3), cfg, np.random.default_rng(0))
        model.layers[0].theta_f = 2.3
        model.layers[0].k_latent = 1.4
        layer = export_for_inference(model)[0]
        assert layer.theta == 3
        assert layer.k == 1

    def test_exported_weights_in_range(self):
        model, _ = train_toy(FAST)
        for layer in export_for_inference(model):
            lim = 2 ** (layer.bits_w - 1) - 1
            assert np.all(np.abs(layer.w_int) <= lim)

    def test_eval_agreement_on_test_split(self):
        cfg = FAST
        model, hist = train_toy(cfg)
        xs, ys = build_toy_dataset(cfg)
        rng = np.random.Generator(np.random.PCG64(cfg.seed + 1))
        _, te = stratified_split(ys, 0.2, rng)
        layers = export_for_inference(model)
        assert export_agreement(model, layers, xs[te])
        preds = np.array([int(np.argmax(qt_forward(layers, xs[i]))) for i in te])
        eval_scores = model.forward(xs[te], mode="eval")
        assert np.array_equal(preds, np.argmax(eval_scores, axis=1))
