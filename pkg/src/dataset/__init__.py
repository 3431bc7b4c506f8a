"""Labeled window datasets and train/test splitting."""

from .split import boundary_sample, select_segment, split_train_test
from .windows import LabeledWindow, WindowDataset, build_dataset, no_spike_candidates, subsample_few_shot

__all__ = [
    "LabeledWindow",
    "WindowDataset",
    "build_dataset",
    "no_spike_candidates",
    "subsample_few_shot",
    "boundary_sample",
    "select_segment",
    "split_train_test",
]
