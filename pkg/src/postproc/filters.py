"""Triangle filtering, peak detection and thresholding of probability traces.

Every output sample depends only on input samples within ``h + 1`` of it,
so any time tile processed with an (h + 1)-sample halo reproduces the
full-trace result exactly.
"""

from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from ..util.errors import InvalidInputError
from ..util.schema import PostprocConfig


@dataclass(frozen=True)
class ProbTrace:
    """Per-sample class probabilities, shape (n_samples, n_classes).

    Row t is the model output for the window centered at sample t; rows
    outside ``[valid_start, valid_stop]`` are uniform.
    """
    probs: np.ndarray
    valid_start: int = 0
    valid_stop: int = -1
    filtered: bool = False

    def __post_init__(self):
        if self.probs.ndim != 2 or self.probs.shape[1] < 2:
            raise InvalidInputError(f"ProbTrace needs an (n_samples, n_classes >= 2) array, got {self.probs.shape}")
        if self.valid_stop < 0:
            object.__setattr__(self, 'valid_stop', self.probs.shape[0] - 1)

    @property
    def n_samples(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    @property
    def valid_range(self) -> Tuple[int, int]:
        return self.valid_start, self.valid_stop

    def segment(self, start: int, stop: int) -> "ProbTrace":
        return replace(self, probs=self.probs[start:stop],
                       valid_start=max(self.valid_start - start, 0),
                       valid_stop=min(self.valid_stop, stop - 1) - start)


@dataclass(frozen=True)
class SortedOutput:
    """Detected spikes ordered by (sample_index, neuron_id)."""
    neuron_ids: np.ndarray
    sample_indices: np.ndarray
    scores: np.ndarray
    n_neurons: int

    def __post_init__(self):
        ids = np.asarray(self.neuron_ids, dtype=np.int64).reshape(-1)
        samples = np.asarray(self.sample_indices, dtype=np.int64).reshape(-1)
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if not (ids.size == samples.size == scores.size):
            raise InvalidInputError("neuron_ids, sample_indices and scores must have equal length")
        if ids.size and (ids.min() < 0 or ids.max() >= self.n_neurons):
            raise InvalidInputError(f"neuron ids must lie in [0, {self.n_neurons})")
        order = np.lexsort((ids, samples))
        object.__setattr__(self, 'neuron_ids', ids[order])
        object.__setattr__(self, 'sample_indices', samples[order])
        object.__setattr__(self, 'scores', scores[order])

    def __len__(self) -> int:
        return int(self.neuron_ids.size)

    @property
    def spikes(self) -> List[Tuple[int, int, float]]:
        return list(zip(self.neuron_ids.tolist(), self.sample_indices.tolist(), self.scores.tolist()))

    def for_neuron(self, neuron_id: int) -> np.ndarray:
        return self.sample_indices[self.neuron_ids == neuron_id]

    def shifted(self, offset: int) -> "SortedOutput":
        return SortedOutput(self.neuron_ids, self.sample_indices + offset, self.scores, self.n_neurons)

    @classmethod
    def concatenate(cls, parts: List["SortedOutput"], n_neurons: int) -> "SortedOutput":
        if not parts:
            return cls(np.zeros(0), np.zeros(0), np.zeros(0), n_neurons)
        return cls(
            np.concatenate([p.neuron_ids for p in parts]),
            np.concatenate([p.sample_indices for p in parts]),
            np.concatenate([p.scores for p in parts]),
            n_neurons,
        )


def triangle_taps(h: int) -> np.ndarray:
    """[1, 2, ..., h+1, ..., 2, 1] / (h+1)**2."""
    if h < 0:
        raise InvalidInputError(f"Triangle half width must be >= 0, got {h}")
    offsets = np.arange(-h, h + 1)
    return (h + 1 - np.abs(offsets)) / float((h + 1) ** 2)


def smooth_columns(values: np.ndarray, h: int) -> np.ndarray:
    """Zero-padded triangle smoothing along axis 0 as a fixed-order sum of shifted copies."""
    taps = triangle_taps(h)
    n = values.shape[0]
    out = np.zeros_like(values, dtype=np.float64)
    for tap, shift in zip(taps, range(-h, h + 1)):
        # out[t] += tap * values[t + shift]
        if shift >= 0:
            out[:n - shift] += tap * values[shift:]
        else:
            out[-shift:] += tap * values[:n + shift]
    return out


def triangle_filter(trace: ProbTrace, h: int) -> ProbTrace:
    """Smooth every neuron column; the background column passes through."""
    filtered = trace.probs.astype(np.float64, copy=True)
    filtered[:, 1:] = smooth_columns(trace.probs[:, 1:].astype(np.float64), h)
    return replace(trace, probs=filtered, filtered=True)


def peak_mask(values: np.ndarray) -> np.ndarray:
    """Boolean mask of local maxima along axis 0: strictly above the left, at least the right."""
    mask = np.zeros(values.shape, dtype=bool)
    if values.shape[0] >= 3:
        mask[1:-1] = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    return mask


def detect_peaks(column: np.ndarray) -> np.ndarray:
    """Indices t with column[t] > column[t-1] and column[t] >= column[t+1]; endpoints excluded."""
    return np.nonzero(peak_mask(np.asarray(column, dtype=np.float64)))[0]


def finalize(filtered: ProbTrace, cfg: PostprocConfig) -> SortedOutput:
    """Emit every neuron-column peak whose filtered probability exceeds the threshold."""
    columns = filtered.probs[:, 1:]
    keep = peak_mask(columns) & (columns > cfg.threshold)
    samples, classes = np.nonzero(keep)
    return SortedOutput(
        neuron_ids=classes,
        sample_indices=samples,
        scores=columns[samples, classes],
        n_neurons=filtered.n_classes - 1,
    )


def postprocess(trace: ProbTrace, cfg: PostprocConfig) -> SortedOutput:
    """Triangle filter followed by finalize."""
    return finalize(triangle_filter(trace, cfg.triangle_half_width), cfg)


def tile_bounds(n_samples: int, n_tiles: int) -> List[Tuple[int, int]]:
    edges = np.linspace(0, n_samples, n_tiles + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def postprocess_tile(trace: ProbTrace, cfg: PostprocConfig, start: int, stop: int) -> SortedOutput:
    """Spikes in [start, stop), computed from the tile plus an (h + 1)-sample halo."""
    halo = cfg.triangle_half_width + 1
    lo = max(start - halo, 0)
    hi = min(stop + halo, trace.n_samples)
    found = postprocess(trace.segment(lo, hi), cfg).shifted(lo)
    inside = (found.sample_indices >= start) & (found.sample_indices < stop)
    return SortedOutput(found.neuron_ids[inside], found.sample_indices[inside], found.scores[inside], found.n_neurons)


def finalize_tiled(trace: ProbTrace, cfg: PostprocConfig, n_tiles: int) -> SortedOutput:
    """Post-process ``n_tiles`` time tiles independently and concatenate; equals ``postprocess``."""
    if n_tiles < 1:
        raise InvalidInputError(f"n_tiles must be >= 1, got {n_tiles}")
    parts = [postprocess_tile(trace, cfg, a, b) for a, b in tile_bounds(trace.n_samples, n_tiles)]
    return SortedOutput.concatenate(parts, trace.n_classes - 1)
