"""Train/test split of a recording at a time boundary."""

from typing import Tuple

from ..core.recording import GroundTruth, Recording
from ..util.errors import InvalidInputError

Segment = Tuple[Recording, GroundTruth]


def boundary_sample(rec: Recording, boundary_s: float) -> int:
    """Sample index of ``boundary_s`` seconds, rounded to the nearest sample."""
    return int(round(boundary_s * rec.sample_rate_hz))


def split_train_test(rec: Recording, gt: GroundTruth, boundary_s: float) -> Tuple[Segment, Segment]:
    """Cut ``rec`` at ``boundary_s`` and partition ``gt`` by sample index.

    Spikes at or after the boundary sample go to the test segment with
    indices re-based to its origin.
    """
    if not 0 < boundary_s < rec.duration_s:
        raise InvalidInputError(
            f"boundary_s must lie strictly inside (0, {rec.duration_s:g}) s, got {boundary_s}"
        )
    boundary = boundary_sample(rec, boundary_s)
    if not 0 < boundary < rec.n_samples:
        raise InvalidInputError(f"boundary_s={boundary_s} rounds to sample {boundary}, outside the recording")
    train = (rec.segment(0, boundary), gt.segment(0, boundary))
    test = (rec.segment(boundary, rec.n_samples), gt.segment(boundary, rec.n_samples))
    return train, test


def select_segment(rec: Recording, gt: GroundTruth, segment: str, boundary_s: float) -> Segment:
    """Return the ``all``, ``train`` or ``test`` part of a recording."""
    if segment == "all":
        return rec, gt
    train, test = split_train_test(rec, gt, boundary_s)
    if segment == "train":
        return train
    if segment == "test":
        return test
    raise InvalidInputError(f"Unknown segment {segment!r}; expected all, train or test")
