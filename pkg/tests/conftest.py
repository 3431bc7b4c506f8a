"""Shared fixtures: small probes, short recordings and toy models."""

import numpy as np
import pytest

from src.core.probe import ProbeGeometry
from src.core.recording import GroundTruth, Recording
from src.core.rng import Rng
from src.nn.model import init_model
from src.synth.generator import synthesize
from src.util.schema import BackboneConfig, RunConfig, SynthConfig, TrainSettings, WindowSpec


def line_probe(n_channels: int = 4, pitch: float = 20.0) -> ProbeGeometry:
    """Single-column probe along z."""
    return ProbeGeometry(
        channel_positions=[(0.0, 0.0, i * pitch) for i in range(n_channels)],
        pitch_um=pitch,
        name=f"line{n_channels}",
    )


def zero_recording(n_channels: int, n_samples: int, sample_rate_hz: float = 10000.0) -> Recording:
    return Recording(
        samples=np.zeros((n_channels, n_samples), dtype=np.float32),
        sample_rate_hz=sample_rate_hz,
        geometry=line_probe(n_channels),
    )


@pytest.fixture
def probe4():
    return line_probe(4)


@pytest.fixture
def toy_backbone_cfg():
    return BackboneConfig(c_t1=3, c_t2=2, c_s=4, k_t1=3, k_t2=3)


@pytest.fixture
def toy_model(toy_backbone_cfg):
    """4 channels, 9-sample windows, 3 classes, float64."""
    return init_model(toy_backbone_cfg, 4, 9, 3, Rng(7))


@pytest.fixture
def tiny_synth_config(probe4):
    """Three neurons on four channels, 3 s at 10 kHz."""
    return SynthConfig(
        probe=probe4,
        n_neurons=3,
        duration_s=3.0,
        noise_uv=2.0,
        sample_rate_hz=10000.0,
        firing_rate_range_hz=(5.0, 10.0),
        seed=5,
    )


@pytest.fixture
def tiny_window():
    return WindowSpec(t_window=21, t_shift=2)


@pytest.fixture
def tiny_run_config(tiny_synth_config, tiny_window):
    return RunConfig(
        synth=tiny_synth_config,
        window=tiny_window,
        backbone=BackboneConfig(c_t1=4, c_t2=3, c_s=4, k_t1=5, k_t2=3),
        train=TrainSettings(epochs=2, batch_size=32, seed=1),
    )


@pytest.fixture
def tiny_recording(tiny_synth_config):
    return synthesize(tiny_synth_config)


@pytest.fixture
def simple_gt():
    return GroundTruth.from_pairs([(0, 100), (1, 250), (0, 400)], n_neurons=2, n_samples=1000)
