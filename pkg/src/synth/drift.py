"""Drift laws along the probe's z axis.

slow       coherent triangle wave: slope ``velocity_um_per_s``, peak ``range_um``,
           zero at t = 0.
fast       coherent piecewise-constant offset; at every ``jump_period_s``
           boundary a uniform jump in [-jump_max_um, +jump_max_um] is added,
           and the running offset is clamped to [-range_um, +range_um] when
           ``range_um > 0``.
non_rigid  one triangle wave per neuron with the same slope and peak and an
           independent uniform initial phase.

Random draws come from the supplied Rng in a fixed order (jumps for fast,
one phase per neuron for non_rigid), so a field built for more time or more
neurons extends, never changes, the draws of a smaller one.
"""

from typing import Optional

import numpy as np

from ..core.rng import Rng
from ..util.errors import InvalidInputError
from ..util.schema import DriftSpec


def triangle_wave(t_s: np.ndarray, velocity: float, peak: float, phase: float = 0.0) -> np.ndarray:
    """Triangle wave in [0, peak] with slope ``velocity``, starting at ``phase`` along its path."""
    period_path = 2.0 * peak
    travelled = np.mod(velocity * np.asarray(t_s, dtype=np.float64) + phase, period_path)
    return peak - np.abs(peak - travelled)


class DriftField:
    """Drift state drawn once and evaluated for any (time, neuron)."""

    def __init__(self, spec: DriftSpec, n_neurons: int, duration_s: float, rng: Optional[Rng] = None):
        self.spec = spec
        self.n_neurons = int(n_neurons)
        self.jump_offsets = np.zeros(1)
        self.phases = np.zeros(self.n_neurons)
        if spec.kind == "fast":
            n_jumps = int(np.floor(duration_s / spec.jump_period_s)) if duration_s > 0 else 0
            jumps = rng.uniform(n_jumps, -spec.jump_max_um, spec.jump_max_um) if n_jumps else np.zeros(0)
            offsets = [0.0]
            for jump in jumps:
                value = offsets[-1] + jump
                if spec.range_um > 0:
                    value = min(max(value, -spec.range_um), spec.range_um)
                offsets.append(value)
            self.jump_offsets = np.asarray(offsets)
        elif spec.kind == "non_rigid":
            self.phases = rng.uniform(self.n_neurons, 0.0, 2.0 * spec.range_um)

    @property
    def coherent(self) -> bool:
        return self.spec.kind != "non_rigid"

    def displacement(self, t_s, neuron_index: int = 0) -> np.ndarray:
        """z-offset in µm at times ``t_s`` (scalar or array) for one neuron."""
        spec = self.spec
        t_s = np.asarray(t_s, dtype=np.float64)
        if spec.kind == "none":
            return np.zeros_like(t_s)
        if spec.kind == "slow":
            return triangle_wave(t_s, spec.velocity_um_per_s, spec.range_um)
        if spec.kind == "fast":
            steps = np.floor(t_s / spec.jump_period_s).astype(np.int64)
            steps = np.clip(steps, 0, self.jump_offsets.size - 1)
            return self.jump_offsets[steps]
        return triangle_wave(t_s, spec.velocity_um_per_s, spec.range_um, self.phases[neuron_index])


def drift_displacement(spec: DriftSpec, t_s: float, neuron_index: int, rng_stream: Rng) -> float:
    """z-offset in µm of one neuron at time ``t_s``.

    Consumes from ``rng_stream`` exactly the draws a DriftField covering
    [0, t_s] and neurons [0, neuron_index] would.
    """
    if t_s < 0:
        raise InvalidInputError(f"t_s must be non-negative, got {t_s}")
    field = DriftField(spec, n_neurons=neuron_index + 1, duration_s=t_s, rng=rng_stream)
    return float(field.displacement(t_s, neuron_index))
