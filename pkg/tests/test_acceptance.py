"""Benchmark-scale behaviour of the whole sorter.

These runs take minutes each; deselect them with ``-m "not slow"``.
"""

import time

import numpy as np
import pytest

from src.core.rng import Rng
from src.dataset.split import split_train_test
from src.dataset.windows import build_dataset
from src.eval.curves import fewshot_curve
from src.eval.match import match
from src.nn.model import init_model
from src.nn.train import finetune, pretrain
from src.postproc.trace import infer_trace, sort_recording
from src.synth.generator import synthesize
from src.util.hashing import derive_seed
from src.util.schema import DriftSpec, RunConfig, SynthConfig

pytestmark = pytest.mark.slow

BENCHMARK_SEEDS = [0, 1, 2]


def benchmark_config(seed: int, **synth) -> RunConfig:
    """16 channels, 20 neurons, 10 uV noise, 100 s, split at 50 s."""
    values = dict(n_neurons=20, noise_uv=10.0, duration_s=100.0, seed=seed)
    values.update(synth)
    cfg = RunConfig()
    return cfg.model_copy(update={"synth": SynthConfig(**values), "train": cfg.train.model_copy(update={"seed": seed})})


def pretrained_backbone(cfg: RunConfig, n_neurons: int = 30):
    synth = cfg.synth.model_copy(update={"n_neurons": n_neurons, "seed": derive_seed(cfg.synth.seed, "pretrain")})
    rec, gt = synthesize(synth)
    return pretrain(rec, gt, cfg.window, cfg.backbone, cfg.train.train_config())


def benchmark_curves(cfg: RunConfig, n_ft_list):
    rec, gt = synthesize(cfg.synth)
    train, test = split_train_test(rec, gt, cfg.eval.boundary_s)
    backbone = pretrained_backbone(cfg)
    scratch = fewshot_curve(None, train, test, n_ft_list, cfg)
    pretrained = fewshot_curve(backbone, train, test, n_ft_list, cfg)
    return scratch, pretrained


class TestSeparableToy:
    """Two noise-free neurons are sorted almost perfectly."""

    def test_end_to_end_accuracy(self):
        cfg = RunConfig(synth=SynthConfig(n_neurons=2, noise_uv=0.0, duration_s=60.0, seed=4))
        rec, gt = synthesize(cfg.synth)
        ds = build_dataset(rec, gt, cfg.window, Rng(derive_seed(cfg.train.seed, "dataset")))
        model = finetune(None, ds, cfg.train.train_config(), cfg.backbone)
        report = match(sort_recording(model, rec, cfg.postproc), gt, cfg.eval.match_config())
        assert report.accuracy >= 0.99


class TestFewShot:
    """Pretraining pays off when annotations are scarce and saturates when they are not."""

    def test_pretrained_beats_scratch(self):
        n_ft_list = [3, 5, 10]
        gains = []
        for seed in BENCHMARK_SEEDS:
            scratch, pretrained = benchmark_curves(benchmark_config(seed), n_ft_list)
            gains.append([pretrained.accuracy_at(n) - scratch.accuracy_at(n) for n in n_ft_list])
        assert np.all(np.mean(gains, axis=0) >= 0.05)

    def test_pretrained_saturates(self):
        cfg = benchmark_config(0)
        rec, gt = synthesize(cfg.synth)
        train, test = split_train_test(rec, gt, cfg.eval.boundary_s)
        curve = fewshot_curve(pretrained_backbone(cfg), train, test, [15, 30], cfg)
        assert abs(curve.accuracy_at(30) - curve.accuracy_at(15)) <= 0.03


class TestConditions:
    """Accuracy follows recording difficulty."""

    def accuracy(self, cfg: RunConfig, n_ft: int = 15) -> float:
        rec, gt = synthesize(cfg.synth)
        train, test = split_train_test(rec, gt, cfg.eval.boundary_s)
        return fewshot_curve(pretrained_backbone(cfg), train, test, [n_ft], cfg).accuracy_at(n_ft)

    def test_noise_ordering(self):
        accuracies = [self.accuracy(benchmark_config(0, noise_uv=noise)) for noise in (10.0, 20.0, 30.0)]
        assert accuracies[0] > accuracies[1] > accuracies[2]

    def test_drift_ordering(self):
        kinds = ["none", "non_rigid", "fast", "slow"]
        mean = {
            kind: np.mean([self.accuracy(benchmark_config(seed, drift=DriftSpec(kind=kind)))
                           for seed in BENCHMARK_SEEDS])
            for kind in kinds
        }
        for better, worse in zip(kinds, kinds[1:]):
            assert mean[better] >= mean[worse] - 0.01


class TestThroughput:
    """Sorting 50 s of 16-channel data stays within a minute on one thread."""

    def test_sort_fifty_seconds(self):
        cfg = benchmark_config(0, duration_s=50.0)
        rec, _ = synthesize(cfg.synth)
        model = init_model(cfg.backbone, rec.n_channels, cfg.window.t_window, cfg.synth.n_neurons + 1, Rng(0))
        start = time.perf_counter()
        sort_recording(model, rec, cfg.postproc, threads=1)
        assert time.perf_counter() - start < 60.0

    def test_batched_equals_sequential_at_scale(self):
        cfg = benchmark_config(0, duration_s=0.5)
        rec, _ = synthesize(cfg.synth)
        model = init_model(cfg.backbone, rec.n_channels, cfg.window.t_window, 21, Rng(1))
        assert np.array_equal(infer_trace(model, rec, batch_size=1).probs,
                              infer_trace(model, rec, batch_size=4096, threads=4).probs)
