"""Template-based synthetic recordings with known ground truth."""

from .drift import DriftField, drift_displacement, triangle_wave
from .generator import (
    NeuronModel,
    draw_spike_trains,
    inject_footprints,
    place_neurons,
    render_recording,
    synthesize,
    synthesize_with_neurons,
)
from .templates import biphasic_waveform, template_length

__all__ = [
    "DriftField",
    "drift_displacement",
    "triangle_wave",
    "NeuronModel",
    "draw_spike_trains",
    "inject_footprints",
    "place_neurons",
    "render_recording",
    "synthesize",
    "synthesize_with_neurons",
    "biphasic_waveform",
    "template_length",
]
