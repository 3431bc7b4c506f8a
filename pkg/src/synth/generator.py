"""Ground-truth-annotated synthetic recordings.

Neurons are parametric point sources: a biphasic template scaled by
``amplitude_uv * exp(-distance / decay_um)`` on every channel, with the
neuron's z position displaced by drift at each spike time. Spikes follow
Poisson processes with an absolute refractory period, overlapping
footprints add linearly, and i.i.d. Gaussian noise is added last.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core.recording import GroundTruth, Recording
from ..core.rng import Rng
from ..util.errors import InvalidInputError
from ..util.hashing import derive_seed
from ..util.schema import SynthConfig
from .drift import DriftField
from .templates import biphasic_waveform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NeuronModel:
    """One synthetic unit."""
    position: Tuple[float, float, float]
    amplitude_uv: float
    waveform: np.ndarray
    firing_rate_hz: float
    decay_um: float

    def __post_init__(self):
        if not (self.amplitude_uv > 0 and self.firing_rate_hz > 0 and self.decay_um > 0):
            raise InvalidInputError("amplitude_uv, firing_rate_hz and decay_um must be positive")
        width = self.waveform.size
        if width % 2 == 0:
            raise InvalidInputError(f"Waveform length must be odd, got {width}")
        center = width // 2
        if abs(abs(self.waveform[center]) - 1.0) > 1e-12 or np.max(np.abs(self.waveform)) > 1.0 + 1e-12:
            raise InvalidInputError("Waveform must peak with absolute value 1 at its center sample")

    def footprint(self, channel_positions: np.ndarray, z_offset: float = 0.0) -> np.ndarray:
        """Per-channel amplitude in µV for the neuron displaced by ``z_offset``."""
        position = np.asarray(self.position, dtype=np.float64) + np.array([0.0, 0.0, z_offset])
        distance = np.linalg.norm(channel_positions - position, axis=1)
        return self.amplitude_uv * np.exp(-distance / self.decay_um)


def _rng(config: SynthConfig, stage: str) -> Rng:
    return Rng(derive_seed(config.seed, stage))


def refractory_samples(config: SynthConfig) -> int:
    """Absolute refractory period rounded up to whole samples."""
    return int(np.ceil(config.refractory_ms * 1e-3 * config.sample_rate_hz - 1e-9))


def place_neurons(config: SynthConfig, rng: Rng) -> List[NeuronModel]:
    """Place neurons uniformly in the probe hull grown by ``hull_margin_um``."""
    low, high = config.probe.hull()
    low = low - config.hull_margin_um
    high = high + config.hull_margin_um
    waveform = biphasic_waveform(config.sample_rate_hz)
    waveform.setflags(write=False)
    neurons = []
    for _ in range(config.n_neurons):
        position = low + (high - low) * rng.uniform(3)
        amplitude = float(rng.uniform(1, *config.amplitude_range_uv)[0])
        rate = float(rng.uniform(1, *config.firing_rate_range_hz)[0])
        neurons.append(NeuronModel(
            position=tuple(float(v) for v in position),
            amplitude_uv=amplitude,
            waveform=waveform,
            firing_rate_hz=rate,
            decay_um=config.decay_um,
        ))
    return neurons


def draw_spike_trains(neurons: List[NeuronModel], config: SynthConfig, rng: Rng) -> GroundTruth:
    """Poisson spike trains with an absolute refractory period.

    Inter-spike intervals are ``refractory + Exp(mean)`` with the mean chosen so
    the long-run rate equals ``firing_rate_hz``.
    """
    fs = config.sample_rate_hz
    n_samples = int(round(config.duration_s * fs))
    refractory = float(refractory_samples(config))
    ids = []
    samples = []
    for neuron_id, neuron in enumerate(neurons):
        mean_gap = fs / neuron.firing_rate_hz - refractory
        expected = int(np.ceil(n_samples / (refractory + mean_gap)))
        block = max(16, expected + 4 * int(np.sqrt(expected)) + 8)
        times = np.zeros(0)
        position = 0.0
        while True:
            gaps = refractory + rng.exponential(block, mean_gap)
            chunk = position + np.cumsum(gaps)
            times = np.concatenate([times, chunk])
            position = chunk[-1]
            if position >= n_samples:
                break
        spike_samples = np.floor(times + 0.5).astype(np.int64)
        spike_samples = spike_samples[spike_samples < n_samples]
        ids.append(np.full(spike_samples.size, neuron_id, dtype=np.int64))
        samples.append(spike_samples)
    return GroundTruth(
        neuron_ids=np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64),
        sample_indices=np.concatenate(samples) if samples else np.zeros(0, dtype=np.int64),
        n_neurons=len(neurons),
        n_samples=n_samples,
    )


def inject_footprints(data: np.ndarray, neurons: List[NeuronModel], gt: GroundTruth,
                      channel_positions: np.ndarray, sample_rate_hz: float,
                      drift: Optional[DriftField] = None, sign: float = 1.0) -> None:
    """Add (or with ``sign=-1`` subtract) every ground-truth spike's footprint in place."""
    n_samples = data.shape[1]
    for neuron_id, sample in zip(gt.neuron_ids.tolist(), gt.sample_indices.tolist()):
        neuron = neurons[neuron_id]
        z_offset = 0.0
        if drift is not None:
            z_offset = float(drift.displacement(sample / sample_rate_hz, neuron_id))
        amplitudes = neuron.footprint(channel_positions, z_offset)
        half = neuron.waveform.size // 2
        start = sample - half
        lo = max(start, 0)
        hi = min(sample + half + 1, n_samples)
        segment = neuron.waveform[lo - start:hi - start]
        data[:, lo:hi] += sign * np.outer(amplitudes, segment)


def render_recording(neurons: List[NeuronModel], gt: GroundTruth, config: SynthConfig,
                     drift: Optional[DriftField] = None, noise_rng: Optional[Rng] = None) -> Recording:
    """Sum the spike footprints of ``gt`` and add Gaussian noise."""
    n_samples = gt.n_samples if gt.n_samples >= 0 else int(round(config.duration_s * config.sample_rate_hz))
    positions = config.probe.positions_array()
    data = np.zeros((config.probe.n_channels, n_samples), dtype=np.float64)
    inject_footprints(data, neurons, gt, positions, config.sample_rate_hz, drift)
    if config.noise_uv > 0:
        if noise_rng is None:
            noise_rng = _rng(config, "noise")
        data += config.noise_uv * noise_rng.normal(data.size).reshape(data.shape)
    return Recording(
        samples=data.astype(np.float32),
        sample_rate_hz=config.sample_rate_hz,
        geometry=config.probe,
        name=config.name,
    )


def build_drift_field(config: SynthConfig) -> DriftField:
    return DriftField(config.drift, config.n_neurons, config.duration_s, _rng(config, "drift"))


def synthesize_with_neurons(config: SynthConfig) -> Tuple[Recording, GroundTruth, List[NeuronModel], DriftField]:
    """Like ``synthesize`` but also returns the neuron models and drift field."""
    neurons = place_neurons(config, _rng(config, "neurons"))
    gt = draw_spike_trains(neurons, config, _rng(config, "spikes"))
    drift = build_drift_field(config)
    recording = render_recording(neurons, gt, config, drift, _rng(config, "noise"))
    return recording, gt, neurons, drift


def synthesize(config: SynthConfig) -> Tuple[Recording, GroundTruth]:
    """Generate a recording and its ground truth from ``config`` alone."""
    recording, gt, _, _ = synthesize_with_neurons(config)
    logger.info(
        f"Synthesized {config.duration_s:.1f} s x {config.probe.n_channels} channels, "
        f"{config.n_neurons} neurons, {len(gt)} spikes, drift={config.drift.kind}, noise={config.noise_uv} uV"
    )
    return recording, gt
