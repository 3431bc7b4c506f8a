"""Shared domain types: probes, recordings, ground truth and the portable RNG."""

from .probe import ProbeGeometry, standard_probe
from .recording import GroundTruth, Recording
from .rng import Rng

__all__ = ["ProbeGeometry", "standard_probe", "GroundTruth", "Recording", "Rng"]
