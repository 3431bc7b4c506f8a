"""Parametric spike templates."""

import numpy as np

# Lobe shapes in milliseconds.
TROUGH_WIDTH_MS = 0.15
PEAK_OFFSET_MS = 0.5
PEAK_WIDTH_MS = 0.25
PEAK_RATIO = 0.35


def template_length(sample_rate_hz: float) -> int:
    """Two milliseconds of samples, odd."""
    half = int(round(1e-3 * sample_rate_hz))
    return 2 * max(half, 1) + 1


def biphasic_waveform(sample_rate_hz: float) -> np.ndarray:
    """Negative trough at the center sample followed by a smaller positive lobe.

    The waveform is scaled so that its center sample is exactly -1, which is
    also its largest absolute value.
    """
    width = template_length(sample_rate_hz)
    half = width // 2
    t_ms = (np.arange(width) - half) * 1e3 / sample_rate_hz
    trough = -np.exp(-0.5 * (t_ms / TROUGH_WIDTH_MS) ** 2)
    peak = PEAK_RATIO * np.exp(-0.5 * ((t_ms - PEAK_OFFSET_MS) / PEAK_WIDTH_MS) ** 2)
    waveform = trough + peak
    waveform = waveform / -waveform[half]
    waveform[half] = -1.0
    return waveform
