"""Probability traces to spike trains."""

from .filters import (
    ProbTrace,
    SortedOutput,
    detect_peaks,
    finalize,
    finalize_tiled,
    peak_mask,
    postprocess,
    triangle_filter,
    triangle_taps,
)
from .trace import infer_trace, sort_recording

__all__ = [
    "ProbTrace",
    "SortedOutput",
    "detect_peaks",
    "finalize",
    "finalize_tiled",
    "peak_mask",
    "postprocess",
    "triangle_filter",
    "triangle_taps",
    "infer_trace",
    "sort_recording",
]
