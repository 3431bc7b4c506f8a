"""Balanced, shift-augmented window datasets.

Class 0 is "no spike"; class k >= 1 is neuron k - 1. Each ground-truth spike
contributes an augmentation group of 2 * t_shift + 1 windows centered at
offsets -t_shift..+t_shift, and an equal number of spike-free windows is
drawn at random.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np

from ..core.recording import GroundTruth, Recording
from ..core.rng import Rng
from ..util.errors import InvalidInputError
from ..util.schema import WindowSpec

logger = logging.getLogger(__name__)

NO_SPIKE = 0


@dataclass(frozen=True)
class LabeledWindow:
    """One (channels, t_window) window and its class."""
    data: np.ndarray
    label: int
    center_sample: int


@dataclass(frozen=True)
class WindowDataset:
    """Window centers and labels over a padded source recording.

    Window data is gathered lazily from ``source``, a copy of the recording
    zero-padded by ``pad`` samples on both sides. Datasets loaded from a dump
    carry ``materialized`` window data instead.
    """
    centers: np.ndarray
    labels: np.ndarray
    spike_ids: np.ndarray
    n_classes: int
    spec: WindowSpec
    source: Optional[np.ndarray] = None
    pad: int = 0
    materialized: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.source is None and self.materialized is None:
            raise InvalidInputError("WindowDataset needs either a source recording or materialized windows")
        if not (self.centers.shape == self.labels.shape == self.spike_ids.shape):
            raise InvalidInputError("centers, labels and spike_ids must have equal length")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise InvalidInputError(f"labels must lie in [0, {self.n_classes})")

    def __len__(self) -> int:
        return int(self.labels.size)

    @property
    def n_channels(self) -> int:
        if self.materialized is not None:
            return int(self.materialized.shape[1])
        return int(self.source.shape[0])

    @property
    def t_window(self) -> int:
        return self.spec.t_window

    def batch(self, indices: Sequence[int]) -> np.ndarray:
        """Window data for ``indices`` as a (B, channels, t_window) float32 array."""
        indices = np.asarray(indices, dtype=np.int64)
        if self.materialized is not None:
            return self.materialized[indices]
        offsets = np.arange(self.spec.t_window) - self.spec.half + self.pad
        columns = self.centers[indices][:, None] + offsets[None, :]
        return np.ascontiguousarray(self.source[:, columns].transpose(1, 0, 2))

    def window(self, index: int) -> LabeledWindow:
        return LabeledWindow(
            data=self.batch([index])[0],
            label=int(self.labels[index]),
            center_sample=int(self.centers[index]),
        )

    @property
    def windows(self) -> List[LabeledWindow]:
        return [self.window(i) for i in range(len(self))]

    def subset(self, indices: Sequence[int]) -> "WindowDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return WindowDataset(
            centers=self.centers[indices],
            labels=self.labels[indices],
            spike_ids=self.spike_ids[indices],
            n_classes=self.n_classes,
            spec=self.spec,
            source=self.source,
            pad=self.pad,
            materialized=None if self.materialized is None else self.materialized[indices],
        )

    def counts(self) -> Dict[str, int]:
        n_spike = int(np.count_nonzero(self.labels != NO_SPIKE))
        return {"spike": n_spike, "no_spike": len(self) - n_spike, "total": len(self)}

    def class_counts(self) -> Dict[int, int]:
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return {label: int(counts[label]) for label in range(self.n_classes)}


def _center_labels(gt: GroundTruth, tolerance: int) -> np.ndarray:
    """Class of the window centered on each spike.

    The spike nearest the center within ``tolerance`` wins; exact ties go to
    the lower neuron id.
    """
    labels = gt.neuron_ids + 1
    if len(gt) == 0:
        return labels
    samples = gt.sample_indices
    ids = gt.neuron_ids
    labels = labels.copy()
    lo = np.searchsorted(samples, samples - tolerance, side='left')
    hi = np.searchsorted(samples, samples + tolerance, side='right')
    for i in np.nonzero(hi - lo > 1)[0]:
        candidates = np.arange(lo[i], hi[i])
        distance = np.abs(samples[candidates] - samples[i])
        best = candidates[np.lexsort((ids[candidates], distance))[0]]
        labels[i] = ids[best] + 1
    return labels


def no_spike_candidates(n_samples: int, gt: GroundTruth, spec: WindowSpec) -> np.ndarray:
    """Centers whose full window lies inside the recording and holds no spike within t_window/2."""
    half = spec.half
    marks = np.zeros(n_samples + 1, dtype=np.int64)
    np.add.at(marks, gt.sample_indices + 1, 1)
    cumulative = np.cumsum(marks)
    centers = np.arange(half, n_samples - half, dtype=np.int64)
    inside = cumulative[centers + half + 1] - cumulative[centers - half]
    return centers[inside == 0]


def build_dataset(rec: Recording, gt: GroundTruth, spec: WindowSpec, rng: Rng) -> WindowDataset:
    """Select spike-centered windows, shift-augment them and balance with no-spike windows."""
    if gt.n_samples >= 0 and gt.n_samples != rec.n_samples:
        raise InvalidInputError(
            f"Ground truth covers {gt.n_samples} samples but the recording has {rec.n_samples}"
        )
    if len(gt) and gt.sample_indices.max() >= rec.n_samples:
        raise InvalidInputError("Ground-truth spike beyond the end of the recording")
    group = 2 * spec.t_shift + 1
    offsets = np.arange(-spec.t_shift, spec.t_shift + 1, dtype=np.int64)

    spike_centers = (gt.sample_indices[:, None] + offsets[None, :]).reshape(-1)
    spike_labels = np.repeat(_center_labels(gt, spec.center_tolerance), group)
    spike_ids = np.repeat(np.arange(len(gt), dtype=np.int64), group)

    n_needed = spike_centers.size
    candidates = no_spike_candidates(rec.n_samples, gt, spec)
    if candidates.size < n_needed:
        raise InvalidInputError(
            f"Recording supplies only {candidates.size} spike-free window centers, "
            f"{n_needed} are needed to balance {len(gt)} spikes"
        )
    chosen = np.sort(candidates[rng.choice(candidates.size, n_needed)])

    pad = spec.half + spec.t_shift
    source = np.pad(rec.samples, ((0, 0), (pad, pad)))
    dataset = WindowDataset(
        centers=np.concatenate([spike_centers, chosen]),
        labels=np.concatenate([spike_labels, np.zeros(n_needed, dtype=np.int64)]),
        spike_ids=np.concatenate([spike_ids, np.full(n_needed, -1, dtype=np.int64)]),
        n_classes=gt.n_neurons + 1,
        spec=spec,
        source=source,
        pad=pad,
    )
    logger.info(f"Built dataset: {dataset.counts()} over {len(gt)} spikes, {dataset.n_classes} classes")
    return dataset


def subsample_few_shot(ds: WindowDataset, n_ft: int, rng: Rng,
                       selection: Literal["random", "earliest"] = "random") -> WindowDataset:
    """Keep the augmentation groups of ``n_ft`` spikes per neuron and re-balance.

    ``selection="random"`` picks the spikes uniformly at random; ``"earliest"``
    keeps each neuron's first ``n_ft`` spikes in time.
    """
    if n_ft < 1:
        raise InvalidInputError(f"n_ft must be at least 1, got {n_ft}")
    is_spike = ds.spike_ids >= 0
    spike_rows = np.nonzero(is_spike)[0]
    group_ids = np.unique(ds.spike_ids[spike_rows])
    # A group counts for the class it is labelled with; colliding spikes share the lower id.
    first_rows = spike_rows[np.searchsorted(ds.spike_ids[spike_rows], group_ids)]
    group_neurons = ds.labels[first_rows] - 1
    group_times = None
    if selection == "earliest":
        group_times = np.full(group_ids.size, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(group_times, np.searchsorted(group_ids, ds.spike_ids[spike_rows]), ds.centers[spike_rows])

    keep_groups = []
    for neuron in range(ds.n_classes - 1):
        mine = np.nonzero(group_neurons == neuron)[0]
        if mine.size < n_ft:
            raise InvalidInputError(f"Neuron {neuron} has only {mine.size} spikes, {n_ft} are required")
        if selection == "earliest":
            picked = mine[np.argsort(group_times[mine], kind='stable')[:n_ft]]
        else:
            picked = mine[rng.choice(mine.size, n_ft)]
        keep_groups.append(group_ids[np.sort(picked)])
    keep_groups = np.concatenate(keep_groups) if keep_groups else np.zeros(0, dtype=np.int64)

    keep_spike_rows = spike_rows[np.isin(ds.spike_ids[spike_rows], keep_groups)]
    no_spike_rows = np.nonzero(~is_spike)[0]
    if no_spike_rows.size < keep_spike_rows.size:
        raise InvalidInputError("Not enough no-spike windows to re-balance the few-shot dataset")
    keep_no_spike = np.sort(no_spike_rows[rng.choice(no_spike_rows.size, keep_spike_rows.size)])
    subset = ds.subset(np.concatenate([keep_spike_rows, keep_no_spike]))
    logger.info(f"Few-shot subset with n_ft={n_ft}: {subset.counts()}")
    return subset
