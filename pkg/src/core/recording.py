"""Recording and ground-truth containers.

Voltages are microvolts and times are sample indices throughout the
public API.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np

from ..util.errors import InvalidInputError
from .probe import ProbeGeometry


@dataclass(frozen=True)
class Recording:
    """Multi-channel voltage trace, shape (channels, samples), float32 µV."""
    samples: np.ndarray
    sample_rate_hz: float
    geometry: ProbeGeometry
    name: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float32)
        if samples.ndim != 2:
            raise InvalidInputError(f"Recording samples must be 2-D (channels, samples), got shape {samples.shape}")
        if samples.shape[0] != self.geometry.n_channels:
            raise InvalidInputError(
                f"Recording has {samples.shape[0]} channels but geometry has {self.geometry.n_channels}"
            )
        if not self.sample_rate_hz > 0:
            raise InvalidInputError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("Recording contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'sample_rate_hz', float(self.sample_rate_hz))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def segment(self, start: int, stop: int) -> "Recording":
        """Return samples [start, stop) as a new recording."""
        return Recording(
            samples=self.samples[:, start:stop],
            sample_rate_hz=self.sample_rate_hz,
            geometry=self.geometry,
            name=self.name,
        )


@dataclass(frozen=True)
class GroundTruth:
    """Spike times of every neuron, sorted by (sample_index, neuron_id)."""
    neuron_ids: np.ndarray
    sample_indices: np.ndarray
    n_neurons: int
    n_samples: int = field(default=-1)

    def __post_init__(self):
        ids = np.asarray(self.neuron_ids, dtype=np.int64).reshape(-1)
        samples = np.asarray(self.sample_indices, dtype=np.int64).reshape(-1)
        if ids.shape != samples.shape:
            raise InvalidInputError(
                f"neuron_ids and sample_indices differ in length: {ids.size} vs {samples.size}"
            )
        if self.n_neurons < 0:
            raise InvalidInputError(f"n_neurons must be non-negative, got {self.n_neurons}")
        if ids.size:
            if ids.min() < 0 or ids.max() >= self.n_neurons:
                raise InvalidInputError(
                    f"neuron ids must lie in [0, {self.n_neurons}), got range [{ids.min()}, {ids.max()}]"
                )
            if samples.min() < 0 or (self.n_samples >= 0 and samples.max() >= self.n_samples):
                raise InvalidInputError(
                    f"sample indices must lie in [0, {self.n_samples}), got range [{samples.min()}, {samples.max()}]"
                )
        order = np.lexsort((ids, samples))
        ids = ids[order]
        samples = samples[order]
        ids.setflags(write=False)
        samples.setflags(write=False)
        object.__setattr__(self, 'neuron_ids', ids)
        object.__setattr__(self, 'sample_indices', samples)
        object.__setattr__(self, 'n_neurons', int(self.n_neurons))

    @classmethod
    def from_pairs(cls, spikes: Iterable[Tuple[int, int]], n_neurons: int, n_samples: int = -1) -> "GroundTruth":
        """Build from (neuron_id, sample_index) pairs in any order."""
        pairs = list(spikes)
        ids = [p[0] for p in pairs]
        samples = [p[1] for p in pairs]
        return cls(np.asarray(ids, dtype=np.int64), np.asarray(samples, dtype=np.int64), n_neurons, n_samples)

    def __len__(self) -> int:
        return int(self.neuron_ids.size)

    @property
    def spikes(self) -> List[Tuple[int, int]]:
        return list(zip(self.neuron_ids.tolist(), self.sample_indices.tolist()))

    def for_neuron(self, neuron_id: int) -> np.ndarray:
        """Return the sorted spike samples of one neuron."""
        return self.sample_indices[self.neuron_ids == neuron_id]

    def counts(self) -> Dict[int, int]:
        """Spike count per neuron, including neurons that never fire."""
        counts = np.bincount(self.neuron_ids, minlength=self.n_neurons)
        return {neuron: int(counts[neuron]) for neuron in range(self.n_neurons)}

    def segment(self, start: int, stop: int) -> "GroundTruth":
        """Keep spikes in [start, stop) and re-base them to ``start``."""
        keep = (self.sample_indices >= start) & (self.sample_indices < stop)
        return GroundTruth(
            neuron_ids=self.neuron_ids[keep],
            sample_indices=self.sample_indices[keep] - start,
            n_neurons=self.n_neurons,
            n_samples=stop - start,
        )
