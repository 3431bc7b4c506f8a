"""Tests for layers, gradients, the optimizer and the training loops."""

import math
import sys

import numpy as np
import pytest

from src.core.recording import GroundTruth
from src.core.rng import Rng
from src.dataset.windows import build_dataset
from src.nn.layers import LayerNorm, softmax
from src.nn.model import (
    SorterModel,
    backward,
    backward_batch,
    forward,
    init_model,
    loss_cross_entropy,
    param_shapes,
)
from src.nn.optim import Adam
from src.nn.sliding import reach, shares_features, window_logits
from src.nn.train import finetune, finetune_run, pretrain, train, window_accuracy
from src.synth.generator import synthesize
from src.util.errors import InvalidInputError, ShapeMismatchError, TrainingDivergedError
from src.util.schema import BackboneConfig, TrainConfig, WindowSpec
from tests.conftest import zero_recording

FD_STEP = 1e-4
FD_TOLERANCE = 1e-3


def min_abs_preactivation(model: SorterModel, windows: np.ndarray) -> float:
    """Smallest |input| any ReLU sees, so finite differences stay off the kinks."""
    x = windows[..., None]
    smallest = np.inf
    for layer in model.layers:
        x, _ = layer.forward(model.params, x)
        if isinstance(layer, LayerNorm):
            smallest = min(smallest, float(np.abs(x).min()))
    return smallest


def numeric_gradient(model: SorterModel, windows: np.ndarray, labels: np.ndarray, name: str) -> np.ndarray:
    param = model.params[name]
    grad = np.zeros_like(param)
    for index in np.ndindex(param.shape):
        original = param[index]
        param[index] = original + FD_STEP
        plus, _ = backward_batch(model, windows, labels, reduction="sum")
        param[index] = original - FD_STEP
        minus, _ = backward_batch(model, windows, labels, reduction="sum")
        param[index] = original
        grad[index] = (plus - minus) / (2 * FD_STEP)
    return grad


class TestGradients:
    """Finite-difference check of every parameter gradient."""

    @pytest.fixture
    def toy_problem(self, toy_model):
        """Toy model with non-zero biases and inputs whose activations avoid the ReLU kinks."""
        rng = np.random.default_rng(0)
        for name, value in toy_model.params.items():
            if name.endswith(".bias"):
                value[...] = rng.normal(0.0, 0.3, size=value.shape)
        for seed in range(200):
            windows = np.random.default_rng(seed).normal(size=(2, 4, 9))
            if min_abs_preactivation(toy_model, windows) > 5e-3:
                return toy_model, windows, np.array([0, 2])
        pytest.fail("No input keeps every activation away from zero")

    def test_every_parameter_matches_finite_differences(self, toy_problem):
        model, windows, labels = toy_problem
        _, grads = backward_batch(model, windows, labels, reduction="sum")
        assert set(grads) == set(model.params)
        for name in sorted(model.params):
            numeric = numeric_gradient(model, windows, labels, name)
            analytic = grads[name]
            denominator = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
            assert np.linalg.norm(analytic - numeric) / denominator < FD_TOLERANCE, name

    def test_single_window_backward(self, toy_problem):
        model, windows, labels = toy_problem
        grads = backward(model, windows[0], int(labels[0]))
        _, batch_grads = backward_batch(model, windows[:1], labels[:1], reduction="sum")
        for name in grads:
            assert np.array_equal(grads[name], batch_grads[name])

    def test_zero_input_first_conv_gradient(self, toy_model):
        """A zero window gives the first temporal conv weights zero gradient."""
        grads = backward(toy_model, np.zeros((4, 9)), 1)
        assert not np.any(grads["backbone.temporal1.weight"])
        assert np.any(grads["classifier.bias"])

    def test_duplicate_example_doubles_gradient(self, toy_model):
        window = np.random.default_rng(3).normal(size=(4, 9))
        single = backward(toy_model, window, 2)
        _, doubled = backward_batch(toy_model, np.stack([window, window]), np.array([2, 2]), reduction="sum")
        for name in single:
            assert np.allclose(doubled[name], 2.0 * single[name], rtol=1e-10, atol=1e-12)

    def test_mean_reduction_scales_loss(self, toy_model):
        windows = np.random.default_rng(4).normal(size=(3, 4, 9))
        labels = np.array([0, 1, 2])
        total, _ = backward_batch(toy_model, windows, labels, reduction="sum")
        mean, _ = backward_batch(toy_model, windows, labels, reduction="mean")
        assert mean == pytest.approx(total / 3)


class TestForward:
    """Test the forward pass and the softmax output."""

    def test_zero_window_is_uniform(self, toy_model):
        probs = forward(toy_model, np.zeros((4, 9)))
        assert np.allclose(probs, 1.0 / 3.0)

    def test_probabilities_sum_to_one(self, toy_model):
        windows = np.random.default_rng(1).normal(0.0, 50.0, size=(16, 4, 9))
        probs = toy_model.predict_proba(windows)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)
        assert np.all((probs > 0) & (probs < 1))

    def test_zero_weights_give_uniform_output(self, toy_model):
        zeroed = toy_model.copy()
        for value in zeroed.params.values():
            value[...] = 0.0
        windows = np.random.default_rng(2).normal(size=(5, 4, 9))
        assert np.allclose(zeroed.predict_proba(windows), 1.0 / 3.0)

    def test_softmax_large_logits(self):
        probs = softmax(np.array([[1000.0, -1000.0, 0.0], [-1000.0, -1000.0, -1000.0]]))
        assert np.all(np.isfinite(probs))
        assert np.allclose(probs.sum(axis=1), 1.0)
        assert np.allclose(probs[1], 1.0 / 3.0)

    def test_batched_equals_one_at_a_time(self, toy_model):
        windows = np.random.default_rng(5).normal(size=(7, 4, 9))
        for model in (toy_model, toy_model.astype(np.float32)):
            batched = model.predict_proba(windows)
            for i in range(7):
                assert np.array_equal(batched[i], model.predict_proba(windows[i:i + 1])[0])

    def test_shape_mismatch(self, toy_model):
        with pytest.raises(ShapeMismatchError, match="expected"):
            forward(toy_model, np.zeros((3, 9)))
        with pytest.raises(ShapeMismatchError):
            forward(toy_model, np.zeros(9))


class TestLayerNorm:
    """Test the normalization layer."""

    def test_zero_mean_unit_variance(self):
        """Every (example, channel, time) position is normalized over its features."""
        layer = LayerNorm("norm", 3)
        params = layer.init_params(Rng(0))
        x = np.random.default_rng(0).normal(2.0, 5.0, size=(2, 4, 9, 3))
        y, _ = layer.forward(params, x)
        assert np.allclose(y.mean(axis=-1), 0.0, atol=1e-4)
        assert np.allclose(y.var(axis=-1), 1.0, atol=1e-4)

    def test_positions_independent(self):
        layer = LayerNorm("norm", 3)
        params = layer.init_params(Rng(0))
        x = np.random.default_rng(1).normal(size=(1, 2, 5, 3))
        changed = x.copy()
        changed[0, 1, 4] *= 100.0
        y, _ = layer.forward(params, x)
        y_changed, _ = layer.forward(params, changed)
        assert np.array_equal(y[0, 0], y_changed[0, 0])
        assert np.array_equal(y[0, 1, :4], y_changed[0, 1, :4])


class TestLossCrossEntropy:
    """Test the cross-entropy loss."""

    def test_perfect_prediction(self):
        assert loss_cross_entropy(np.array([1.0, 0.0, 0.0]), 0) <= 1e-11

    def test_uniform_four_classes(self):
        assert loss_cross_entropy(np.full(4, 0.25), 3) == pytest.approx(math.log(4), abs=1e-4)

    def test_half_probability(self):
        assert loss_cross_entropy(np.array([0.5, 0.5]), 1) == pytest.approx(math.log(2), abs=1e-4)

    def test_floor_applies(self):
        assert loss_cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-math.log(1e-12))

    def test_label_out_of_range(self):
        with pytest.raises(InvalidInputError):
            loss_cross_entropy(np.array([0.5, 0.5]), 2)


class TestSorterModel:
    """Test model construction."""

    def test_parameter_names(self, toy_model, toy_backbone_cfg):
        assert len(toy_model.params) == 14
        assert all(not name.startswith("classifier") for name in toy_model.backbone_params())
        assert set(toy_model.classifier_params()) == {"classifier.weight", "classifier.bias"}
        assert param_shapes(toy_backbone_cfg, 4, 9, 3)["classifier.weight"] == (3, 36)

    def test_initialization(self, toy_model):
        assert not np.any(toy_model.params["backbone.temporal1.bias"])
        assert np.all(toy_model.params["backbone.norm1.weight"] == 1.0)
        bound = math.sqrt(1.0 / 3)
        assert np.all(np.abs(toy_model.params["backbone.temporal1.weight"]) <= bound)

    def test_missing_parameter_rejected(self, toy_model, toy_backbone_cfg):
        params = dict(toy_model.params)
        del params["classifier.bias"]
        with pytest.raises(InvalidInputError, match="missing"):
            SorterModel(toy_backbone_cfg, 4, 9, 3, params)

    def test_wrong_shape_rejected(self, toy_model, toy_backbone_cfg):
        params = dict(toy_model.params)
        params["classifier.bias"] = np.zeros(4)
        with pytest.raises(ShapeMismatchError):
            SorterModel(toy_backbone_cfg, 4, 9, 3, params)

    def test_kernel_longer_than_window(self):
        with pytest.raises(InvalidInputError):
            init_model(BackboneConfig(k_t1=11), 4, 9, 3, Rng(0))

    def test_astype(self, toy_model):
        cast = toy_model.astype(np.float32)
        assert cast.dtype == np.float32
        assert toy_model.dtype == np.float64


class TestAdam:
    """Test the optimizer update."""

    def test_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        optimizer = Adam(params, lr=0.1)
        optimizer.step({"w": np.array([0.5, -4.0, 0.0])})
        assert np.allclose(params["w"], [0.9, -1.9, 3.0], atol=1e-6)
        assert optimizer.t == 1

    def test_zero_learning_rate(self):
        params = {"w": np.array([1.0, 2.0])}
        Adam(params, lr=0.0).step({"w": np.array([3.0, -1.0])})
        assert params["w"].tolist() == [1.0, 2.0]

    def test_from_config(self):
        cfg = TrainConfig(learning_rate=0.01, adam_beta1=0.8)
        optimizer = Adam.from_config({}, cfg)
        assert optimizer.lr == 0.01 and optimizer.beta1 == 0.8


class TestTraining:
    """Test the training loops on a tiny synthetic recording."""

    @pytest.fixture
    def tiny_dataset(self, tiny_recording, tiny_window):
        rec, gt = tiny_recording
        return build_dataset(rec, gt, tiny_window, Rng(0))

    @pytest.fixture
    def small_backbone(self):
        return BackboneConfig(c_t1=4, c_t2=3, c_s=4, k_t1=5, k_t2=3)

    @pytest.fixture
    def fresh_model(self, small_backbone, tiny_dataset):
        return init_model(small_backbone, 4, 21, tiny_dataset.n_classes, Rng(1))

    def test_epoch_losses_recorded(self, fresh_model, tiny_dataset):
        result = train(fresh_model, tiny_dataset, TrainConfig(epochs=3, batch_size=32))
        assert len(result.epoch_losses) == 3
        assert all(np.isfinite(result.epoch_losses))
        assert result.model.dtype == np.float64

    def test_zero_learning_rate_keeps_parameters(self, fresh_model, tiny_dataset):
        result = train(fresh_model, tiny_dataset, TrainConfig(epochs=2, learning_rate=0.0, batch_size=32))
        for name, value in fresh_model.params.items():
            assert np.array_equal(result.model.params[name], value)

    def test_deterministic(self, fresh_model, tiny_dataset):
        cfg = TrainConfig(epochs=2, batch_size=32, seed=3)
        a = train(fresh_model, tiny_dataset, cfg)
        b = train(fresh_model, tiny_dataset, cfg)
        assert a.epoch_losses == b.epoch_losses
        for name in a.model.params:
            assert np.array_equal(a.model.params[name], b.model.params[name])

    def test_training_reduces_loss(self, fresh_model, tiny_dataset):
        result = train(fresh_model, tiny_dataset, TrainConfig(epochs=5, batch_size=32))
        assert result.epoch_losses[-1] < result.epoch_losses[0]
        assert 0.0 <= window_accuracy(result.model, tiny_dataset) <= 1.0

    def test_divergence_guard(self, fresh_model, tiny_dataset, monkeypatch):
        def diverging(model, windows, labels, reduction="mean"):
            return float("nan"), {k: np.zeros_like(v) for k, v in model.params.items()}

        monkeypatch.setattr(sys.modules["src.nn.train"], "backward_batch", diverging)
        with pytest.raises(TrainingDivergedError, match="epoch 1"):
            train(fresh_model, tiny_dataset, TrainConfig(epochs=2))

    def test_dimension_mismatch(self, small_backbone, tiny_dataset):
        model = init_model(small_backbone, 3, 21, tiny_dataset.n_classes, Rng(1))
        with pytest.raises(ShapeMismatchError):
            train(model, tiny_dataset, TrainConfig(epochs=1))

    def test_unknown_freeze_mode(self, fresh_model, tiny_dataset):
        with pytest.raises(InvalidInputError):
            train(fresh_model, tiny_dataset, TrainConfig(epochs=1), freeze="backbone")


class TestPretrainFinetune:
    """Test backbone pretraining and few-shot finetuning."""

    @pytest.fixture
    def small_backbone(self):
        return BackboneConfig(c_t1=4, c_t2=3, c_s=4, k_t1=5, k_t2=3)

    @pytest.fixture
    def backbone(self, tiny_recording, tiny_window, small_backbone):
        rec, gt = tiny_recording
        return pretrain(rec, gt, tiny_window, small_backbone, TrainConfig(epochs=2, batch_size=32))

    @pytest.fixture
    def other_dataset(self, tiny_synth_config, tiny_window):
        """A two-neuron recording, so the class count differs from pretraining."""
        rec, gt = synthesize(tiny_synth_config.model_copy(update={"n_neurons": 2, "seed": 9}))
        return build_dataset(rec, gt, tiny_window, Rng(0))

    def test_backbone_has_no_classifier(self, backbone):
        assert len(backbone.params) == 12
        assert all(name.startswith("backbone.") for name in backbone.params)
        assert len(backbone.epoch_losses) == 2

    def test_needs_two_neurons(self, tiny_window, small_backbone):
        rec = zero_recording(4, 5000)
        gt = GroundTruth.from_pairs([(0, 1000)], n_neurons=1, n_samples=5000)
        with pytest.raises(InvalidInputError, match="at least 2 neurons"):
            pretrain(rec, gt, tiny_window, small_backbone, TrainConfig(epochs=1))

    def test_finetune_other_class_count(self, backbone, other_dataset):
        model = finetune(backbone, other_dataset, TrainConfig(epochs=1, batch_size=32))
        assert model.n_classes == 3
        assert model.classifier_params()["classifier.weight"].shape == (3, 21 * 4)

    def test_finetune_starts_from_backbone(self, backbone, other_dataset):
        result = finetune_run(backbone, other_dataset, TrainConfig(epochs=1, learning_rate=0.0))
        for name, value in backbone.params.items():
            assert np.array_equal(result.model.params[name], value)

    def test_finetune_updates_backbone(self, backbone, other_dataset):
        model = finetune(backbone, other_dataset, TrainConfig(epochs=1, batch_size=32))
        name = "backbone.temporal1.weight"
        assert not np.array_equal(model.params[name], backbone.params[name])

    def test_scratch_arm(self, other_dataset, small_backbone):
        result = finetune_run(None, other_dataset, TrainConfig(epochs=1, batch_size=32), small_backbone)
        assert result.model.n_classes == 3
        assert len(result.epoch_losses) == 1

    def test_warm_start_loss_below_scratch(self, tiny_recording, tiny_window, small_backbone):
        """On the pretraining data itself, a pretrained backbone starts with a lower loss."""
        rec, gt = tiny_recording
        train_cfg = TrainConfig(epochs=4, batch_size=32, seed=3)
        warm = pretrain(rec, gt, tiny_window, small_backbone, train_cfg)
        ds = build_dataset(rec, gt, tiny_window, Rng(0))
        cfg = TrainConfig(epochs=1, batch_size=32, seed=5)
        warm_loss = finetune_run(warm, ds, cfg).epoch_losses[0]
        scratch_loss = finetune_run(None, ds, cfg, small_backbone).epoch_losses[0]
        assert warm_loss < scratch_loss

    def test_channel_mismatch(self, backbone):
        rec = zero_recording(2, 5000)
        gt = GroundTruth.from_pairs([(0, 1000), (1, 3000)], n_neurons=2, n_samples=5000)
        ds = build_dataset(rec, gt, WindowSpec(t_window=21, t_shift=2), Rng(0))
        with pytest.raises(ShapeMismatchError, match="backbone channels"):
            finetune(backbone, ds, TrainConfig(epochs=1))


class TestWindowLogits:
    """Shared-pass logits over a segment agree with per-window logits."""

    def model_with_biases(self, cfg: BackboneConfig, t_window: int, seed: int) -> SorterModel:
        model = init_model(cfg, 4, t_window, 3, Rng(seed))
        rng = np.random.default_rng(seed)
        for name, value in model.params.items():
            if name.endswith(".bias"):
                value[...] = rng.normal(0.0, 0.3, size=value.shape)
        return model

    def per_window(self, model: SorterModel, segment: np.ndarray) -> np.ndarray:
        n = segment.shape[1] - model.t_window + 1
        windows = np.stack([segment[:, b:b + model.t_window] for b in range(n)])
        return model.logits(windows)

    @pytest.mark.parametrize("cfg,t_window", [
        (BackboneConfig(c_t1=3, c_t2=2, c_s=4, k_t1=3, k_t2=3), 9),
        (BackboneConfig(c_t1=4, c_t2=3, c_s=4, k_t1=5, k_t2=3), 21),
        (BackboneConfig(c_t1=4, c_t2=3, c_s=5, k_t1=5, k_t2=5), 9),
        (BackboneConfig(c_t1=3, c_t2=3, c_s=4, k_t1=7, k_t2=7), 9),
    ])
    def test_matches_per_window_logits(self, cfg, t_window):
        model = self.model_with_biases(cfg, t_window, seed=t_window)
        segment = np.random.default_rng(0).normal(0.0, 3.0, size=(4, t_window + 40))
        shared = window_logits(model, segment)
        assert shared.shape == (41, 3)
        assert np.allclose(shared, self.per_window(model, segment), rtol=1e-10, atol=1e-10)

    def test_float32(self):
        model = self.model_with_biases(BackboneConfig(c_t1=4, c_t2=3, c_s=4, k_t1=5, k_t2=3), 21, 1).astype(np.float32)
        segment = np.random.default_rng(1).normal(0.0, 3.0, size=(4, 60)).astype(np.float32)
        shared = window_logits(model, segment)
        assert shared.dtype == np.float32
        assert np.allclose(shared, self.per_window(model, segment), rtol=1e-4, atol=1e-4)

    def test_single_window(self, toy_model):
        window = np.random.default_rng(2).normal(size=(4, 9))
        assert np.allclose(window_logits(toy_model, window)[0], toy_model.logits(window[None])[0], atol=1e-12)

    def test_reach(self):
        assert reach(init_model(BackboneConfig(), 16, 61, 21, Rng(0))) == 7
        assert shares_features(init_model(BackboneConfig(), 16, 61, 21, Rng(0)))
        assert not shares_features(init_model(BackboneConfig(k_t1=7, k_t2=7), 4, 9, 3, Rng(0)))
